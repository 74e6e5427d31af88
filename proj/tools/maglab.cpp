// maglab CLI: scenario runs, per-analysis shortcuts, verification replay from
// stored records, and CSV extraction for plotting.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <maglab/harness.hpp>

namespace {

// print stored verdict tables (and structured errors) for each record
int report_records(const std::vector<maglab::json>& recs, double tol_scale,
                   bool rederive) {
  int fails = 0;
  for (const maglab::json& rec : recs) {
    const std::string id = rec.value("scenario", std::string("unknown"));
    std::cout << "== " << id << "\n";
    if (rec.contains("error")) {
      std::cout << "  error: " << rec.at("error").value("message", "") << "\n";
      continue;
    }
    for (const char* k : {"spectrum", "mane", "flow", "shadow", "iso"})
      if (rec.contains(k) && rec.at(k).is_object() && rec.at(k).contains("error"))
        std::cout << "  " << k << " error: "
                  << rec.at(k).at("error").value("message", "") << "\n";
    std::vector<maglab::VerifyRow> rows;
    if (rederive) {
      rows = maglab::verify_record(rec, tol_scale);
    } else if (rec.contains("verify")) {
      for (const auto& r : rec.at("verify"))
        rows.push_back(maglab::VerifyRow{r.value("name", ""), r.value("verdict", ""),
                                         maglab::detail::jnum(r, "lhs"),
                                         maglab::detail::jnum(r, "rhs"),
                                         maglab::detail::jnum(r, "tol", 0.0),
                                         maglab::detail::jnum(r, "slack"),
                                         r.value("note", "")});
    }
    if (!rows.empty()) std::cout << maglab::format_verify_table(rows);
    for (const auto& r : rows)
      if (r.verdict == "FAIL") ++fails;
  }
  return fails;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maglab: magnetic-geodesic laboratory on discrete model geometries"};
  app.require_subcommand(0, 1);

  maglab::RunOptions opt;
  std::int64_t seed_val = 0;
  std::string records_path;

  app.add_option("--config", opt.config_path, "scenario configuration file");
  auto* seed_opt =
      app.add_option("--seed", seed_val, "override every scenario's RNG seed");
  app.add_option("--threads", opt.threads, "scenario-level thread budget")
      ->default_val(1);
  app.add_option("--tol-scale", opt.tol_scale, "scale factor on verification tolerances")
      ->default_val(1.0);
  app.add_option("--out-dir", opt.out_dir,
                 "output directory (the MAGLAB_OUT_DIR environment variable overrides)");

  CLI::App* sub_run = app.add_subcommand("run", "run every requested analysis per scenario");
  CLI::App* singles[5] = {
      app.add_subcommand("spectrum", "run only the spectral analysis"),
      app.add_subcommand("mane", "run only the critical-value analysis"),
      app.add_subcommand("flow", "run only the flow/comass analysis"),
      app.add_subcommand("shadow", "run only the shadow-geodesic analysis"),
      app.add_subcommand("iso", "run only the isoperimetric analysis"),
  };
  const char* single_names[5] = {"spectrum", "mane", "flow", "shadow", "iso"};

  CLI::App* sub_verify =
      app.add_subcommand("verify", "re-derive verdict tables from stored records");
  sub_verify->add_option("--records", records_path,
                         "records.jsonl path (default <out-dir>/records.jsonl)");
  CLI::App* sub_plot =
      app.add_subcommand("plot-data", "extract plottable CSV series from stored records");
  sub_plot->add_option("--records", records_path,
                       "records.jsonl path (default <out-dir>/records.jsonl)");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) opt.seed = static_cast<std::uint64_t>(seed_val);

  std::string out_dir = opt.out_dir;
  if (const char* env = std::getenv("MAGLAB_OUT_DIR")) out_dir = env;
  if (records_path.empty()) records_path = out_dir + "/records.jsonl";

  try {
    if (sub_verify->parsed()) {
      const int fails = report_records(maglab::read_jsonl(records_path), opt.tol_scale,
                                       /*rederive=*/true);
      std::cout << (fails ? "FAIL" : "OK") << ": " << fails << " failing check(s)\n";
      return fails ? 1 : 0;
    }
    if (sub_plot->parsed()) {
      for (const std::string& f : maglab::plot_data(records_path, out_dir))
        std::cout << "wrote " << f << "\n";
      return 0;
    }

    // default action (and `run`/single-analysis subcommands): execute scenarios
    for (int i = 0; i < 5; ++i)
      if (singles[i]->parsed()) opt.only = {single_names[i]};
    (void)sub_run;
    if (opt.config_path.empty()) {
      std::cerr << "error: --config is required to run scenarios\n";
      return 2;
    }
    maglab::RunSummary sum = maglab::run_config(opt);
    const int printed_fails =
        report_records(maglab::read_jsonl(sum.records_path), opt.tol_scale,
                       /*rederive=*/false);
    (void)printed_fails;  // already counted in the summary
    std::cout << sum.scenarios << " scenario(s), " << sum.errors << " error(s), "
              << sum.fail_rows << " failing check(s) -> " << sum.records_path << "\n";
    return sum.ok() ? 0 : 1;
  } catch (const maglab::Error& e) {
    std::cerr << "error " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
