#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "pfn/geodata/records.hpp"
#include "pfn/numcore/tensor.hpp"
#include "pfn/prior/prior.hpp"

namespace pfn {

/// Log-space mean of one parameter at depth z:
/// intercept + slope * z + crust_amp * exp(-z / crust_depth).
struct DepthTrend {
  double intercept = 0.0;
  double slope = 0.0;
  double crust_amp = 0.0;
  double crust_depth = 1.0;

  double at(double z) const;
};

/// Axis-aligned rectangle in site coordinates, bounds inclusive.
struct Region {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct SynthSiteConfig {
  std::string site_id = "S1";
  int n_boreholes = 40;
  IntRange records_per_borehole{10, 30};
  /// Boreholes are placed uniformly in [origin, origin + extent].
  double origin_x = 0.0;
  double origin_y = 0.0;
  double extent_x = 3000.0;
  double extent_y = 3000.0;
  double depth_start = 1.0;
  double depth_step = 1.0;
  double depth_jitter = 0.25;
  std::array<DepthTrend, kParamCount> trends{};
  /// 11 x k loadings of the per-record latent factors.
  MatrixR<double> loadings;
  std::array<double, kParamCount> noise_sd{};
  std::array<double, kParamCount> borehole_sd{};
  /// Smooth spatial field shared by nearby boreholes (random Fourier features).
  std::array<double, kParamCount> spatial_sd{};
  double spatial_length = 800.0;
  std::array<double, kParamCount> missing_rate{};
  std::string borehole_prefix = "BH";
  /// Extra boreholes placed uniformly inside `dense_region`, named dense_prefix + 1, 2, ...
  std::optional<Region> dense_region;
  int dense_boreholes = 0;
  std::string dense_prefix = "B";
  std::uint64_t seed = 1;

  void validate() const;
};

/// Clay-like defaults: crusted strength profile, three latent factors, sparse mechanical tests.
SynthSiteConfig default_site_config();

void to_json(nlohmann::json& j, const SynthSiteConfig& c);
void from_json(const nlohmann::json& j, SynthSiteConfig& c);

struct SynthSite {
  SiteTable observed;
  /// The same records before missingness was applied.
  SiteTable complete;
};

SynthSite generate_site_with_truth(const SynthSiteConfig& cfg);
SiteTable generate_site(const SynthSiteConfig& cfg);

/// Records inside `region` form the verification table; the rest form the BID.
std::pair<SiteTable, SiteTable> split_verification(const SiteTable& table, const Region& region);

void to_json(nlohmann::json& j, const Region& r);
void from_json(const nlohmann::json& j, Region& r);

}  // namespace pfn
