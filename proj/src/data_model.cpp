#include "snl/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "snl/error.hpp"
#include "snl/random.hpp"

namespace snl {

namespace {

constexpr std::uint64_t kCenterStream = 1;
constexpr std::uint64_t kCameraStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kSplitStream = 4;

std::vector<double> gaussian_vector(Rng& rng, int dimension, double stddev) {
  std::vector<double> v(static_cast<std::size_t>(dimension), 0.0);
  if (stddev == 0.0) return v;
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& x : v) x = normal(rng);
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Dataset::Dataset(std::size_t dimension, std::vector<LabeledSample> samples) : dimension_(dimension) {
  samples_.reserve(samples.size());
  for (auto& s : samples) add(std::move(s));
}

void Dataset::add(LabeledSample sample) {
  if (sample.features.size() != dimension_) {
    throw ValidationError("sample " + std::to_string(sample.sample_id) + " has " +
                          std::to_string(sample.features.size()) + " features, dataset dimension is " +
                          std::to_string(dimension_));
  }
  if (sample.identity < 0 || sample.camera < 0) {
    throw ValidationError("sample " + std::to_string(sample.sample_id) +
                          " has a negative identity or camera");
  }
  for (double f : sample.features) {
    if (!std::isfinite(f)) {
      throw ValidationError("sample " + std::to_string(sample.sample_id) + " has a non-finite feature");
    }
  }
  if (!sample_ids_.insert(sample.sample_id).second) {
    throw ValidationError("duplicate sample_id " + std::to_string(sample.sample_id));
  }
  identity_index_[sample.identity].push_back(samples_.size());
  samples_.push_back(std::move(sample));
}

std::vector<int> Dataset::identities() const {
  std::vector<int> ids;
  ids.reserve(identity_index_.size());
  for (const auto& [id, _] : identity_index_) ids.push_back(id);
  return ids;
}

Matrix Dataset::features() const {
  Matrix m(static_cast<Eigen::Index>(samples_.size()), static_cast<Eigen::Index>(dimension_));
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    for (std::size_t k = 0; k < dimension_; ++k) m(i, k) = samples_[i].features[k];
  }
  return m;
}

Matrix Dataset::features(std::span<const std::size_t> indices) const {
  Matrix m(static_cast<Eigen::Index>(indices.size()), static_cast<Eigen::Index>(dimension_));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& f = samples_.at(indices[i]).features;
    for (std::size_t k = 0; k < dimension_; ++k) m(i, k) = f[k];
  }
  return m;
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.identity);
  return out;
}

std::vector<int> Dataset::labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples_.at(i).identity);
  return out;
}

std::vector<int> Dataset::cameras() const {
  std::vector<int> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.camera);
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(dimension_);
  for (auto i : indices) out.add(samples_.at(i));
  return out;
}

void SyntheticSpec::validate() const {
  if (num_identities <= 0) throw ValidationError("num_identities must be positive");
  if (samples_per_identity <= 0) throw ValidationError("samples_per_identity must be positive");
  if (num_cameras <= 0) throw ValidationError("num_cameras must be positive");
  if (dimension <= 0) throw ValidationError("dimension must be positive");
  if (identity_offset < 0) throw ValidationError("identity_offset must be non-negative");
  if (!std::isfinite(identity_spread) || identity_spread <= 0.0) {
    throw ValidationError("identity_spread must be positive and finite");
  }
  if (!std::isfinite(intra_spread) || intra_spread <= 0.0) {
    throw ValidationError("intra_spread must be positive and finite");
  }
  if (!std::isfinite(camera_shift) || camera_shift < 0.0) {
    throw ValidationError("camera_shift must be non-negative and finite");
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto dim = spec.dimension;

  std::vector<std::vector<double>> camera_offsets;
  camera_offsets.reserve(static_cast<std::size_t>(spec.num_cameras));
  for (int v = 0; v < spec.num_cameras; ++v) {
    auto rng = keyed_rng(spec.seed, {kCameraStream, static_cast<std::uint64_t>(v)});
    camera_offsets.push_back(gaussian_vector(rng, dim, spec.camera_shift));
  }

  Dataset out(static_cast<std::size_t>(dim));
  for (int c = 0; c < spec.num_identities; ++c) {
    const int identity = spec.identity_offset + c;
    auto center_rng = keyed_rng(spec.seed, {kCenterStream, static_cast<std::uint64_t>(identity)});
    const auto center = gaussian_vector(center_rng, dim, spec.identity_spread);

    for (int s = 0; s < spec.samples_per_identity; ++s) {
      auto noise_rng = keyed_rng(spec.seed, {kNoiseStream, static_cast<std::uint64_t>(identity),
                                             static_cast<std::uint64_t>(s)});
      const auto noise = gaussian_vector(noise_rng, dim, spec.intra_spread);
      const int camera = s % spec.num_cameras;

      LabeledSample sample;
      sample.sample_id = static_cast<std::int64_t>(identity) * spec.samples_per_identity + s;
      sample.identity = identity;
      sample.camera = camera;
      sample.features.resize(static_cast<std::size_t>(dim));
      for (int k = 0; k < dim; ++k) {
        sample.features[k] = center[k] + camera_offsets[camera][k] + noise[k];
      }
      out.add(std::move(sample));
    }
  }
  return out;
}

void write_features(std::ostream& out, const Dataset& dataset) {
  out << "id,camera";
  for (std::size_t k = 0; k < dataset.dimension(); ++k) out << ",f" << k;
  out << '\n';
  char buf[32];
  for (const auto& s : dataset.samples()) {
    out << s.identity << ',' << s.camera;
    for (double f : s.features) {
      std::snprintf(buf, sizeof buf, "%.17g", f);
      out << ',' << buf;
    }
    out << '\n';
  }
}

void save_features(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_features(out, dataset);
  if (!out) throw Error("failed writing " + path.string());
}

Dataset read_features(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("feature file is empty (missing header)", 0);

  const auto header = split_fields(line);
  if (header.size() < 2 || trim(header[0]) != "id" || trim(header[1]) != "camera") {
    throw ParseError("header must start with id,camera", 0);
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t k = 0; k < dim; ++k) {
    if (trim(header[k + 2]) != "f" + std::to_string(k)) {
      throw ParseError("header column " + std::to_string(k + 3) + " must be f" + std::to_string(k), 0);
    }
  }
  if (dim == 0) throw ParseError("header declares no feature columns", 0);

  Dataset out(dim);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    auto fail = [row](const std::string& what) -> ParseError {
      return ParseError("row " + std::to_string(row) + ": " + what, row);
    };
    if (fields.size() != header.size()) {
      throw fail("expected " + std::to_string(header.size()) + " columns, found " +
                 std::to_string(fields.size()));
    }
    LabeledSample s;
    s.sample_id = static_cast<std::int64_t>(row - 1);
    if (!parse_number(fields[0], s.identity) || s.identity < 0) throw fail("invalid id");
    if (!parse_number(fields[1], s.camera) || s.camera < 0) throw fail("invalid camera");
    s.features.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_number(fields[k + 2], s.features[k]) || !std::isfinite(s.features[k])) {
        throw fail("non-numeric value in column f" + std::to_string(k));
      }
    }
    out.add(std::move(s));
  }
  return out;
}

Dataset load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_features(in);
}

QueryGallery split_query_gallery(const Dataset& dataset, double query_fraction, std::uint64_t seed) {
  if (!(query_fraction > 0.0 && query_fraction < 1.0)) {
    throw ValidationError("query_fraction must lie in (0, 1)");
  }
  std::vector<int> singletons;
  for (const auto& [id, members] : dataset.identity_index()) {
    if (members.size() < 2) singletons.push_back(id);
  }
  if (!singletons.empty()) {
    std::string msg = "identities with a single sample cannot be split:";
    for (int id : singletons) msg += " " + std::to_string(id);
    throw SplitError(msg);
  }

  std::vector<bool> to_query(dataset.size(), false);
  for (const auto& [id, members] : dataset.identity_index()) {
    auto order = members;
    auto rng = keyed_rng(seed, {kSplitStream, static_cast<std::uint64_t>(id)});
    std::shuffle(order.begin(), order.end(), rng);
    const auto n = static_cast<long>(order.size());
    const long nq = std::clamp(std::lround(static_cast<double>(n) * query_fraction), 1L, n - 1);
    for (long i = 0; i < nq; ++i) to_query[order[i]] = true;
  }

  std::vector<std::size_t> q, g;
  for (std::size_t i = 0; i < dataset.size(); ++i) (to_query[i] ? q : g).push_back(i);
  return {dataset.subset(q), dataset.subset(g)};
}

IdentityPartition partition_identities(const Dataset& dataset, std::size_t count) {
  if (count > dataset.num_identities()) {
    throw ValidationError("cannot take " + std::to_string(count) + " identities from a dataset with " +
                          std::to_string(dataset.num_identities()));
  }
  std::unordered_set<int> first_ids;
  for (const auto& [id, _] : dataset.identity_index()) {
    if (first_ids.size() == count) break;
    first_ids.insert(id);
  }
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (first_ids.count(dataset[i].identity) ? a : b).push_back(i);
  }
  return {dataset.subset(a), dataset.subset(b)};
}

}  // namespace snl
