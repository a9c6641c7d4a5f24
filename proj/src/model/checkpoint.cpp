#include "pfn/model/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace pfn {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'F', 'N', '1'};
constexpr std::uint64_t kMaxMetadata = 64ull << 20;
constexpr std::uint32_t kMaxName = 4096;

template <class U>
void put(std::ostream& os, U v) {
  std::array<char, sizeof(U)> b;
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b.data(), b.size());
}

template <class U>
U get(std::istream& is, ErrorKind on_short) {
  std::array<unsigned char, sizeof(U)> b;
  is.read(reinterpret_cast<char*>(b.data()), b.size());
  require(is.gcount() == static_cast<std::streamsize>(b.size()), on_short, "checkpoint ended early");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  ckpt.model.validate();
  ckpt.bars.validate();
  require(ckpt.bars.n_bins() == ckpt.model.n_bins, ErrorKind::contract, "bar layout does not match n_bins");
  const nlohmann::json meta{{"model", ckpt.model},
                            {"prior", ckpt.prior},
                            {"bars", ckpt.bars},
                            {"target_scaling", ckpt.scaling},
                            {"training", ckpt.training},
                            {"parameter_count", ckpt.weights.scalar_count()}};
  const std::string text = meta.dump();
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.weights.size()));
  for (std::size_t i = 0; i < ckpt.weights.size(); ++i) {
    const auto& name = ckpt.weights.name(i);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    const auto& shape = ckpt.weights[i].shape();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
    for (Index e : shape) put<std::uint64_t>(os, static_cast<std::uint64_t>(e));
  }
  for (std::size_t i = 0; i < ckpt.weights.size(); ++i) {
    const auto& t = ckpt.weights[i];
    for (Index k = 0; k < t.size(); ++k) put<std::uint32_t>(os, std::bit_cast<std::uint32_t>(t[k]));
  }
  require(static_cast<bool>(os), ErrorKind::io, "failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  require(is.gcount() == 4 && magic == kMagic, ErrorKind::not_checkpoint, "not a checkpoint file");
  const auto version = get<std::uint32_t>(is, ErrorKind::corrupt_header);
  require(version == kCheckpointVersion, ErrorKind::version_mismatch,
          "checkpoint version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kCheckpointVersion) + ")");
  const auto meta_len = get<std::uint64_t>(is, ErrorKind::corrupt_header);
  require(meta_len <= kMaxMetadata, ErrorKind::corrupt_header, "checkpoint metadata length is implausible");
  std::string text(meta_len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(meta_len));
  require(is.gcount() == static_cast<std::streamsize>(meta_len), ErrorKind::corrupt_header, "checkpoint metadata truncated");

  Checkpoint ckpt;
  try {
    const auto meta = nlohmann::json::parse(text);
    ckpt.model = meta.at("model").get<ModelConfig>();
    ckpt.prior = meta.at("prior").get<PriorConfig>();
    ckpt.bars = meta.at("bars").get<BarLayout>();
    ckpt.scaling = meta.at("target_scaling").get<TargetScaling>();
    ckpt.training = meta.value("training", nlohmann::json::object());
  } catch (const Error& e) {
    fail(ErrorKind::corrupt_header, std::string("checkpoint metadata invalid: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::corrupt_header, std::string("checkpoint metadata invalid: ") + e.what());
  }
  require(ckpt.bars.n_bins() == ckpt.model.n_bins, ErrorKind::corrupt_header, "bar layout does not match n_bins");

  const auto expected = parameter_layout(ckpt.model);
  const auto count = get<std::uint32_t>(is, ErrorKind::corrupt_header);
  require(count == expected.size(), ErrorKind::corrupt_header,
          "checkpoint holds " + std::to_string(count) + " tensors; configuration implies " +
              std::to_string(expected.size()));
  std::vector<std::pair<std::string, Shape>> index;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(is, ErrorKind::corrupt_header);
    require(len <= kMaxName, ErrorKind::corrupt_header, "tensor name too long");
    std::string name(len, '\0');
    is.read(name.data(), len);
    require(is.gcount() == static_cast<std::streamsize>(len), ErrorKind::corrupt_header, "tensor index truncated");
    const auto rank = get<std::uint32_t>(is, ErrorKind::corrupt_header);
    require(rank <= 8, ErrorKind::corrupt_header, "tensor rank implausible");
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(static_cast<Index>(get<std::uint64_t>(is, ErrorKind::corrupt_header)));
    require(name == expected[i].name && shape == expected[i].shape, ErrorKind::corrupt_header,
            "tensor '" + name + "' " + shape_str(shape) + " does not match the configuration");
    index.emplace_back(std::move(name), std::move(shape));
  }
  for (auto& [name, shape] : index) {
    Tensor<float> t(shape);
    for (Index k = 0; k < t.size(); ++k) t[k] = std::bit_cast<float>(get<std::uint32_t>(is, ErrorKind::truncated_blob));
    ckpt.weights.add(name, std::move(t));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(os), ErrorKind::io, "cannot open " + tmp.string() + " for writing");
    write_checkpoint(os, ckpt);
    os.close();
    require(static_cast<bool>(os), ErrorKind::io, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::io, "cannot open checkpoint " + path.string());
  return read_checkpoint(is);
}

}  // namespace pfn
