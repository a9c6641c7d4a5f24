#include <ostream>
#include <sstream>

#include "common.hpp"
#include "pfn/core/io.hpp"
#include "pfn/geodata/synth.hpp"

namespace pfn::app {

namespace {

std::filesystem::path save(const std::filesystem::path& path, const SiteTable& table) {
  std::ostringstream os;
  write_csv(os, table);
  write_file_atomic(path, os.str());
  return path;
}

}  // namespace

int cmd_synth(const Flags& flags, std::ostream& out) {
  nlohmann::json config = load_config(flags);
  SynthSiteConfig site = config.contains("site") ? config.at("site").get<SynthSiteConfig>() : default_site_config();
  site.seed = resolve_seed(flags, config, site.seed);
  // A verification region without explicit dense boreholes gets five of them.
  if (config.contains("verification") && !site.dense_region) {
    site.dense_region = config.at("verification").get<Region>();
    if (site.dense_boreholes == 0) site.dense_boreholes = 5;
  }
  site.validate();
  config["site"] = site;
  config["seed"] = site.seed;

  const auto dir = output_dir(flags, config);
  const auto synth = generate_site_with_truth(site);
  std::vector<std::filesystem::path> outputs{save(dir / "site.csv", synth.observed),
                                             save(dir / "truth.csv", synth.complete)};
  out << "site " << site.site_id << ": " << synth.observed.records.size() << " records in "
      << synth.observed.borehole_ids().size() << " boreholes\n";
  if (config.contains("verification")) {
    const auto region = config.at("verification").get<Region>();
    const auto [bid, verification] = split_verification(synth.observed, region);
    outputs.push_back(save(dir / "bid.csv", bid));
    outputs.push_back(save(dir / "verification.csv", verification));
    out << "verification region: " << verification.records.size() << " records, BID: " << bid.records.size()
        << " records\n";
  }
  write_manifest(dir, "synth", config, outputs);
  return ok;
}

}  // namespace pfn::app
