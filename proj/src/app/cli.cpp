#include "pfn/app/cli.hpp"

#include <CLI11.hpp>
#include <iostream>

#include "pfn/core/io.hpp"

namespace pfn::app {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::contract:
      return usage;
    case ErrorKind::capacity:
      return capacity;
    case ErrorKind::data:
    case ErrorKind::empty_context:
    case ErrorKind::io:
    case ErrorKind::not_checkpoint:
    case ErrorKind::version_mismatch:
    case ErrorKind::corrupt_header:
    case ErrorKind::truncated_blob:
      return data;
    default:
      return failure;
  }
}

nlohmann::json load_config(const Flags& flags) {
  if (!flags.config) return nlohmann::json::object();
  auto j = read_json_file(*flags.config);
  require(j.is_object(), ErrorKind::config, "config " + *flags.config + " must hold a JSON object");
  if (j.contains("command") && j.contains("config")) return j.at("config");
  return j;
}

std::filesystem::path output_dir(const Flags& flags, const nlohmann::json& config) {
  if (flags.out) return *flags.out;
  return config.value("out", std::string("."));
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& config,
                    const std::vector<std::filesystem::path>& outputs, const nlohmann::json& extra) {
  nlohmann::json files = nlohmann::json::object();
  for (const auto& p : outputs) files[p.filename().string()] = fingerprint(read_file(p));
  nlohmann::json m{{"command", command}, {"config", config}, {"outputs", files}};
  if (!extra.is_null()) m["details"] = extra;
  write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prior-data fitted network toolkit for borehole data", "pfn"};
  app.require_subcommand(1);
  Flags flags;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON config file or a previous run's manifest");
    sub->add_option("--seed", seed, "Run seed (overrides the config)");
    sub->add_option("--checkpoint", flags.checkpoint, "Model checkpoint path");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--bid", flags.bid, "BID label");
    sub->add_option("--view", flags.view, "Feature view: 4 or 11")->check(CLI::IsMember({"4", "11"}));
    sub->add_option("--scenario", flags.scenario, "individual or simultaneous")
        ->check(CLI::IsMember({"individual", "simultaneous"}));
    sub->add_option("inputs", flags.inputs, "Input files");
  };
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Flags&, std::ostream&);
  };
  const Sub subs[] = {
      {"pretrain", "Meta-train a model on synthetic prior tasks", cmd_pretrain},
      {"synth", "Generate a synthetic multi-borehole site", cmd_synth},
      {"bench1", "Borehole s_u prediction benchmark", cmd_bench1},
      {"bench2", "Mechanical-parameter imputation benchmark", cmd_bench2},
      {"impute", "Predict one missing column of a CSV table", cmd_impute},
      {"report", "Render tables and plots from a results directory", cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> handles;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    handles.emplace_back(sub, &s);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "pfn: " << e.what() << "\n";
    return usage;
  }
  for (auto& [sub, s] : handles) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) flags.seed = seed;
    try {
      return s->fn(flags, out);
    } catch (const Error& e) {
      err << "pfn " << s->name << ": " << e.what() << "\n";
      return exit_code(e.kind());
    } catch (const nlohmann::json::exception& e) {
      err << "pfn " << s->name << ": config error: " << e.what() << "\n";
      return usage;
    } catch (const std::filesystem::filesystem_error& e) {
      err << "pfn " << s->name << ": io error: " << e.what() << "\n";
      return data;
    }
  }
  return usage;
}

}  // namespace pfn::app
