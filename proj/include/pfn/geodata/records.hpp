#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pfn {

/// The eleven soil parameters, index properties first, then the mechanical ones.
enum class Param : int { Sr, gamma_t, e, LL, PL, w, su, Eu, sigma_p, Cc, cv };

inline constexpr int kParamCount = 11;
inline constexpr std::array<const char*, kParamCount> kParamNames{"Sr", "gamma_t", "e",  "LL",      "PL", "w",
                                                                  "su", "Eu",      "sigma_p", "Cc", "cv"};
inline constexpr std::array<Param, 5> kMechanical{Param::su, Param::Eu, Param::sigma_p, Param::Cc, Param::cv};

inline constexpr int index_of(Param p) { return static_cast<int>(p); }
inline const char* name_of(Param p) { return kParamNames[static_cast<std::size_t>(p)]; }
std::optional<Param> param_from_name(const std::string& name);
bool is_mechanical(Param p);

struct BoreholeRecord {
  std::string site_id;
  std::string borehole_id;
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;
  std::array<std::optional<double>, kParamCount> values{};

  const std::optional<double>& operator[](Param p) const { return values[static_cast<std::size_t>(p)]; }
  std::optional<double>& operator[](Param p) { return values[static_cast<std::size_t>(p)]; }
  bool has(Param p) const { return (*this)[p].has_value(); }

  bool operator==(const BoreholeRecord&) const = default;
};

/// Records of one site or BID, with a provenance label.
struct SiteTable {
  std::string label;
  std::vector<BoreholeRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  /// Distinct borehole ids in order of first appearance.
  std::vector<std::string> borehole_ids() const;

  /// Throws a data error naming the offending record on any invariant violation.
  void validate() const;

  bool operator==(const SiteTable&) const = default;
};

/// Records from several tables, in order, under a new label.
SiteTable concat(const std::string& label, const std::vector<const SiteTable*>& parts);

inline constexpr const char* kCsvHeader = "site_id,borehole_id,x,y,depth,Sr,gamma_t,e,LL,PL,w,su,Eu,sigma_p,Cc,cv";

SiteTable read_csv(std::istream& is, const std::string& label, const std::string& source = "<stream>");
SiteTable load_csv(const std::filesystem::path& path);
void write_csv(std::ostream& os, const SiteTable& table);
void save_csv(const std::filesystem::path& path, const SiteTable& table);

/// Decimal text with 9 significant digits, as used in CSV output.
std::string format_sig9(double v);
/// v rounded to the value its 9-significant-digit text parses back to.
double round_sig9(double v);

}  // namespace pfn
