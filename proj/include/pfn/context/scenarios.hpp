#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfn/context/context.hpp"
#include "pfn/geodata/synth.hpp"

namespace pfn {

/// A BID. Cluster-style BIDs hold a separate table per target borehole.
struct Bid {
  std::string label;
  SiteTable table;
  std::map<std::string, SiteTable> per_borehole;

  bool cluster() const { return !per_borehole.empty(); }
  const SiteTable& for_borehole(const std::string& id) const;
};

/// One task per (BID, borehole), BIDs outermost.
std::vector<BuiltTask> individual_scenario(const std::vector<Bid>& bids, const SiteTable& site,
                                           const std::vector<std::string>& boreholes, View view, Param target,
                                           const CategoryEncoder& encoder, const ContextOptions& options);

/// One task per non-cluster BID covering all boreholes.
std::vector<BuiltTask> simultaneous_scenario(const std::vector<Bid>& bids, const SiteTable& site,
                                             const std::vector<std::string>& boreholes, View view, Param target,
                                             const CategoryEncoder& encoder, const ContextOptions& options);

/// One task per (pattern, missing parameter) of the problem table.
std::vector<BuiltTask> imputation_scenario(const Bid& bid, const SiteTable& problem, const CategoryEncoder& encoder,
                                           const ContextOptions& options);

/// Hides the target on a share of each listed borehole's records (at least one kept
/// and one hidden when the borehole has two or more). Returns the records with the
/// target hidden, parallel to `complete`.
SiteTable hide_target(const SiteTable& complete, const std::vector<std::string>& boreholes, Param target,
                      double fraction, std::uint64_t seed);

/// Synthetic stand-in for the individual/simultaneous prediction benchmark.
struct Bench1Config {
  SynthSiteConfig site;
  Region verification{1350.0, 1350.0, 1650.0, 1650.0};
  int global_sites = 5;
  int global_boreholes = 20;
  double local_v_radius = 1000.0;
  int cluster_size = 6;
  double hide_fraction = 0.5;
  std::uint64_t seed = 1;
};

Bench1Config default_bench1_config();
void to_json(nlohmann::json& j, const Bench1Config& c);
void from_json(const nlohmann::json& j, Bench1Config& c);

struct Bench1Data {
  /// Verification records with the target partly hidden on the target boreholes.
  SiteTable site;
  /// The same records with every value present.
  SiteTable truth;
  std::vector<std::string> boreholes;
  /// Cluster-BID, Local-BID-V, Local-BID, Global-BID.
  std::vector<Bid> bids;
};

Bench1Data make_bench1(const Bench1Config& cfg);

/// Synthetic stand-in for the imputation benchmark.
struct Bench2Config {
  SynthSiteConfig site;
  Region verification{1350.0, 1350.0, 1650.0, 1650.0};
  /// Engineered missing sets; the default four have sizes summing to 14.
  std::vector<std::vector<Param>> patterns;
  /// Share of verification records left complete.
  double complete_fraction = 0.2;
  std::uint64_t seed = 1;
};

Bench2Config default_bench2_config();
void to_json(nlohmann::json& j, const Bench2Config& c);
void from_json(const nlohmann::json& j, Bench2Config& c);

struct Bench2Data {
  Bid bid;
  SiteTable problem;
  SiteTable truth;
};

Bench2Data make_bench2(const Bench2Config& cfg);

/// Two adjacent regions whose strength profiles follow different depth trends.
struct TwoRegionConfig {
  SynthSiteConfig region_a;
  SynthSiteConfig region_b;
  /// Records (with the target observed) in each BID.
  Index bid_rows = 200;
  double hide_fraction = 0.5;
  std::uint64_t seed = 1;
};

TwoRegionConfig default_two_region_config(std::uint64_t seed);

struct TwoRegionData {
  SiteTable site;
  SiteTable truth;
  std::vector<std::string> boreholes;
  Bid matched;
  Bid mismatched;
};

TwoRegionData make_two_region(const TwoRegionConfig& cfg);

}  // namespace pfn
