//------------------------------------------------------------------------------
//
//   Copyright 2026 The mdcc Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "mdcc/mdcc.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

namespace {

namespace fs = std::filesystem;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage   = 2;

void print_table(std::ostream &out, std::string const &title, std::vector<mdcc::StageReport> const &reports)
{
  out << title << '\n';
  out << "  stage  leaves  EN-Acc   F-score  N      N_known  N_unknown  TP     FP     FN\n";
  for (auto const &r : reports)
  {
    auto const &c = r.counts;
    out << "  " << std::setw(5) << r.stage << "  " << std::setw(6) << r.leaves << "  " << std::fixed
        << std::setprecision(4) << r.en_accuracy << "   " << r.f_score << "   " << std::setw(5) << c.n << "  "
        << std::setw(7) << c.n_known << "  " << std::setw(9) << c.n_unknown << "  " << std::setw(5) << c.tp << "  "
        << std::setw(5) << c.fp << "  " << std::setw(5) << c.fn << '\n';
  }
  out << std::defaultfloat;
}

mdcc::RunConfig resolve_config(std::string const &preset, std::string const &config_path,
                               std::optional<std::uint64_t> seed)
{
  mdcc::RunConfig cfg = mdcc::preset(preset.empty() ? "default" : preset);
  if (!config_path.empty())
  {
    if (!fs::exists(config_path))
    {
      throw mdcc::ConfigError("config", "file '" + config_path + "' does not exist");
    }
    cfg = mdcc::load_run_config(config_path, cfg);
  }
  cfg = mdcc::apply_env_overrides(cfg);
  if (seed)
  {
    cfg.seed = *seed;
  }
  mdcc::validate(cfg);
  return cfg;
}

mdcc::Dataset read_dataset(std::string const &path)
{
  if (!fs::exists(path))
  {
    throw mdcc::Error("dataset '" + path + "' does not exist");
  }
  return mdcc::load_dataset(path);
}

int cmd_synth(mdcc::SynthSpec const &spec, std::string const &out, std::string const &format)
{
  auto const ds  = mdcc::synth_generate(spec);
  auto const fmt = format.empty() ? mdcc::data_format_for(out) : mdcc::data_format_from_string(format);
  if (auto parent = fs::path(out).parent_path(); !parent.empty())
  {
    fs::create_directories(parent);
  }
  mdcc::save_dataset(ds, out, fmt);
  std::cout << "wrote " << ds.instances.size() << " instances (" << spec.num_classes << " classes, dim " << spec.dim
            << ") to " << out << '\n';
  return 0;
}

int cmd_run(mdcc::RunConfig const &cfg, std::string const &data, std::string const &out)
{
  auto const ds       = read_dataset(data);
  auto const schedule = mdcc::make_schedule(cfg, ds);
  auto const result   = mdcc::run_protocol(ds, schedule, mdcc::to_protocol_config(cfg));
  auto const files    = mdcc::write_run_outputs(out, result, mdcc::to_json(cfg));

  std::cout << "root train accuracy " << result.root_train_accuracy << '\n';
  print_table(std::cout, "stages (post-transition)", mdcc::detection_reports(result));
  print_table(std::cout, "after each arrival", mdcc::recognition_reports(result));
  std::cout << "wrote " << files.stages_csv.string() << ", " << files.recognition_csv.string() << ", "
            << files.report_json.string() << ", " << files.losses_csv.string() << ", "
            << files.cascade_json.string() << '\n';
  return 0;
}

int cmd_eval(std::string const &model, std::string const &data, std::string const &out)
{
  auto const ds   = read_dataset(data);
  auto const test = ds.split(mdcc::Split::test);
  if (test.empty())
  {
    throw mdcc::Error("dataset '" + data + "' has no test instances");
  }
  auto const cascade = mdcc::load_cascade(model);
  if (ds.feature_dim != cascade.feature_dim())
  {
    throw mdcc::ShapeError("dataset has " + std::to_string(ds.feature_dim) + " features, model expects " +
                           std::to_string(cascade.feature_dim()));
  }
  auto const ev     = mdcc::evaluate(cascade, test);
  auto const report = mdcc::make_report(cascade.stage(), cascade.stage(), ev.outcomes);
  print_table(std::cout, "evaluation", {report});
  if (!out.empty())
  {
    fs::create_directories(out);
    std::ostringstream csv;
    mdcc::write_stage_csv(csv, {report});
    mdcc::write_text_file(fs::path(out) / "eval.csv", csv.str());
    mdcc::Json j;
    j["model"]  = model;
    j["data"]   = data;
    j["config"] = mdcc::load_cascade_config_echo(model);
    j["report"] = mdcc::to_json(report);
    mdcc::write_text_file(fs::path(out) / "eval.json", mdcc::dump(j));
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Open-world classification with multi-stage classifier cascades"};
  app.require_subcommand(1);

  mdcc::SynthSpec spec;
  std::string     synth_out, synth_format;
  auto           *synth = app.add_subcommand("synth", "Generate a Gaussian open-world dataset");
  synth->add_option("--classes", spec.num_classes, "Number of classes")->check(CLI::PositiveNumber);
  synth->add_option("--dim", spec.dim, "Feature dimension")->check(CLI::PositiveNumber);
  synth->add_option("--sep", spec.separation, "Minimum distance between class centers")->check(CLI::PositiveNumber);
  synth->add_option("--train", spec.per_class_train, "Train instances per class");
  synth->add_option("--test", spec.per_class_test, "Test instances per class");
  synth->add_option("--seed", spec.seed, "Generator seed");
  synth->add_option("--format", synth_format, "csv or jsonl (default: from the file extension)");
  synth->add_option("--out", synth_out, "Output dataset file")->required();

  std::string                  run_data, run_out, run_config, run_preset;
  std::optional<std::uint64_t> run_seed;
  auto *run = app.add_subcommand("run", "Run the staged streaming protocol and write reports");
  run->add_option("--data", run_data, "Dataset file (csv or jsonl)")->required();
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--config", run_config, "JSON run configuration");
  run->add_option("--preset", run_preset, "Named hyperparameter preset (default, rf, twitter)");
  run->add_option("--seed", run_seed, "Overrides the configured seed");

  std::string eval_model, eval_data, eval_out;
  auto       *eval = app.add_subcommand("eval", "Score a saved cascade on a dataset's test split");
  eval->add_option("--model", eval_model, "Cascade file written by run")->required();
  eval->add_option("--data", eval_data, "Dataset file")->required();
  eval->add_option("--out", eval_out, "Directory for eval.csv and eval.json");

  std::string                  cfg_config, cfg_preset;
  std::optional<std::uint64_t> cfg_seed;
  auto *config = app.add_subcommand("config", "Print the fully resolved run configuration");
  config->add_option("--config", cfg_config, "JSON run configuration");
  config->add_option("--preset", cfg_preset, "Named hyperparameter preset");
  config->add_option("--seed", cfg_seed, "Overrides the configured seed");

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::CallForHelp const &e)
  {
    return app.exit(e);
  }
  catch (CLI::ParseError const &e)
  {
    app.exit(e);
    return kExitUsage;
  }

  try
  {
    if (synth->parsed())
    {
      return cmd_synth(spec, synth_out, synth_format);
    }
    if (run->parsed())
    {
      return cmd_run(resolve_config(run_preset, run_config, run_seed), run_data, run_out);
    }
    if (eval->parsed())
    {
      return cmd_eval(eval_model, eval_data, eval_out);
    }
    if (config->parsed())
    {
      std::cout << mdcc::to_json(resolve_config(cfg_preset, cfg_config, cfg_seed)).dump(2) << '\n';
      return 0;
    }
  }
  catch (mdcc::ConfigError const &e)
  {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  catch (std::exception const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
