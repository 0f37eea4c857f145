#ifndef DEMPOOL_FEATURES_HPP
#define DEMPOOL_FEATURES_HPP

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dempool/common.hpp"

namespace dempool {

enum class FileFormat { csv, raw_f32 };

/// What to do with rows whose l2 norm is not strictly positive.
enum class ZeroRowPolicy { reject, drop };

/// Optional spatial provenance of a feature map: n = width*height, d = depth.
struct SourceShape {
  Index width = 0;
  Index height = 0;
  Index depth = 0;
};

/// An ordered set of n local features of dimension d, one per row.
/// Immutable after construction; rows are guaranteed finite with strictly
/// positive l2 norm.
template <typename Scalar>
struct FeatureSet {
  Matrix<Scalar> data;
  std::optional<SourceShape> source_shape;

  Index count() const { return data.rows(); }
  Index dim() const { return data.cols(); }
};

/// Validates a raw matrix and wraps it as a FeatureSet. Rows with l2 norm
/// <= norm_epsilon are rejected with an error or dropped per policy.
template <typename Scalar>
FeatureSet<Scalar> make_feature_set(Matrix<Scalar> data,
                                    ZeroRowPolicy policy = ZeroRowPolicy::reject,
                                    Scalar norm_epsilon = Scalar(0)) {
  require(data.rows() >= 1 && data.cols() >= 1, errc::invalid_argument,
          "feature set must have n >= 1 and d >= 1");
  require(data.allFinite(), errc::non_finite_entry,
          "feature set contains a non-finite entry");

  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(data.rows()));
  for (Index i = 0; i < data.rows(); ++i) {
    if (data.row(i).norm() > norm_epsilon) {
      keep.push_back(i);
    } else if (policy == ZeroRowPolicy::reject) {
      fail(errc::zero_row,
           "row " + std::to_string(i) + " has l2 norm <= epsilon");
    }
  }
  require(!keep.empty(), errc::zero_row, "all rows dropped as zero rows");

  if (static_cast<Index>(keep.size()) == data.rows())
    return FeatureSet<Scalar>{std::move(data), std::nullopt};

  Matrix<Scalar> kept(static_cast<Index>(keep.size()), data.cols());
  for (Index i = 0; i < kept.rows(); ++i)
    kept.row(i) = data.row(keep[static_cast<std::size_t>(i)]);
  return FeatureSet<Scalar>{std::move(kept), std::nullopt};
}

/// Records the W x H x D provenance of a flattened feature map.
template <typename Scalar>
FeatureSet<Scalar> attach_source_shape(FeatureSet<Scalar> fs,
                                       SourceShape shape) {
  require(shape.width >= 1 && shape.height >= 1 && shape.depth >= 1,
          errc::invalid_argument, "source shape sides must be >= 1");
  require(shape.width * shape.height == fs.count() && shape.depth == fs.dim(),
          errc::dimension_mismatch,
          "source shape does not match the feature matrix");
  fs.source_shape = shape;
  return fs;
}

namespace detail {

// raw-f32 layout: bytes 0-3 magic "DPF1", 4-7 n (u32 LE), 8-11 d (u32 LE),
// 12-15 reserved zero, then n*d IEEE-754 f32 values row-major.
inline constexpr char kRawMagic[4] = {'D', 'P', 'F', '1'};

static_assert(std::endian::native == std::endian::little,
              "raw-f32 reader assumes a little-endian host");

inline std::uint32_t read_u32(const unsigned char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

template <typename Scalar>
Matrix<Scalar> load_matrix_raw_f32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io_error, "cannot open '" + path + "'");
  unsigned char header[16];
  in.read(reinterpret_cast<char*>(header), 16);
  require(in.gcount() == 16, errc::parse_error,
          "raw-f32: truncated header in '" + path + "'");
  require(std::memcmp(header, kRawMagic, 4) == 0, errc::parse_error,
          "raw-f32: bad magic in '" + path + "'");
  const std::uint32_t n = read_u32(header + 4);
  const std::uint32_t d = read_u32(header + 8);
  require(read_u32(header + 12) == 0, errc::parse_error,
          "raw-f32: reserved header bytes must be zero in '" + path + "'");
  require(n >= 1 && d >= 1, errc::parse_error,
          "raw-f32: header declares an empty matrix in '" + path + "'");

  const std::size_t count = std::size_t(n) * std::size_t(d);
  std::vector<float> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  require(in.gcount() == static_cast<std::streamsize>(count * sizeof(float)),
          errc::parse_error, "raw-f32: truncated payload in '" + path + "'");

  Matrix<Scalar> m(n, d);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < d; ++j)
      m(i, j) = static_cast<Scalar>(buf[std::size_t(i) * d + j]);
  return m;
}

template <typename Scalar>
void save_matrix_raw_f32(const std::string& path, const Matrix<Scalar>& m) {
  require(m.rows() <= Index(UINT32_MAX) && m.cols() <= Index(UINT32_MAX),
          errc::invalid_argument, "matrix too large for the raw-f32 header");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), errc::io_error, "cannot open '" + path + "' for writing");
  unsigned char header[16] = {};
  std::memcpy(header, kRawMagic, 4);
  const std::uint32_t n = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t d = static_cast<std::uint32_t>(m.cols());
  std::memcpy(header + 4, &n, 4);
  std::memcpy(header + 8, &d, 4);
  out.write(reinterpret_cast<const char*>(header), 16);
  std::vector<float> buf(std::size_t(n) * d);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < d; ++j)
      buf[std::size_t(i) * d + j] = static_cast<float>(m(i, j));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  require(out.good(), errc::io_error, "write failed for '" + path + "'");
}

template <typename Scalar>
Matrix<Scalar> load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_error, "cannot open '" + path + "'");
  std::vector<std::vector<Scalar>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<Scalar> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      while (p != end && (*p == ' ' || *p == '\t')) ++p;
      double value = 0;
      auto [next, ec] = std::from_chars(p, end, value);
      require(ec == std::errc(), errc::parse_error,
              "csv: cannot parse number at line " + std::to_string(lineno) +
                  " in '" + path + "'");
      row.push_back(static_cast<Scalar>(value));
      p = next;
      while (p != end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      require(*p == ',', errc::parse_error,
              "csv: expected ',' at line " + std::to_string(lineno) + " in '" +
                  path + "'");
      ++p;
    }
    if (!rows.empty()) {
      require(row.size() == rows.front().size(), errc::dimension_mismatch,
              "csv: line " + std::to_string(lineno) + " has " +
                  std::to_string(row.size()) + " values, expected " +
                  std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), errc::parse_error, "csv: no data rows in '" + path + "'");
  Matrix<Scalar> m(static_cast<Index>(rows.size()),
                   static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

template <typename Scalar>
void save_matrix_csv(const std::string& path, const Matrix<Scalar>& m) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), errc::io_error, "cannot open '" + path + "' for writing");
  constexpr int digits = std::numeric_limits<Scalar>::max_digits10;
  char buf[64];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.*g", digits,
                    static_cast<double>(m(i, j)));
      out << buf;
      if (j + 1 < m.cols()) out << ',';
    }
    out << '\n';
  }
  require(out.good(), errc::io_error, "write failed for '" + path + "'");
}

}  // namespace detail

template <typename Scalar>
Matrix<Scalar> load_matrix(const std::string& path, FileFormat format) {
  return format == FileFormat::csv ? detail::load_matrix_csv<Scalar>(path)
                                   : detail::load_matrix_raw_f32<Scalar>(path);
}

template <typename Scalar>
void save_matrix(const std::string& path, const Matrix<Scalar>& m,
                 FileFormat format) {
  if (format == FileFormat::csv)
    detail::save_matrix_csv(path, m);
  else
    detail::save_matrix_raw_f32(path, m);
}

/// Loads a feature set from disk, preserving row order.
template <typename Scalar>
FeatureSet<Scalar> load_features(const std::string& path, FileFormat format,
                                 ZeroRowPolicy policy = ZeroRowPolicy::reject,
                                 Scalar norm_epsilon = Scalar(0)) {
  return make_feature_set<Scalar>(load_matrix<Scalar>(path, format), policy,
                                  norm_epsilon);
}

template <typename Scalar>
void save_features(const std::string& path, const FeatureSet<Scalar>& fs,
                   FileFormat format) {
  save_matrix(path, fs.data, format);
}

/// Recipe for a deterministic synthetic feature set. A burst_fraction of the
/// rows are near-collinear high-norm copies of one shared direction, a
/// signal_fraction align with class-specific orthogonal axes, and the rest
/// are isotropic noise of scale noise_scale.
struct SyntheticSpec {
  Index n = 64;
  Index d = 32;
  double burst_fraction = 0.0;
  double signal_fraction = 0.0;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
  int class_id = 0;
};

inline void validate(const SyntheticSpec& spec) {
  require(spec.n >= 1 && spec.d >= 1, errc::invalid_argument,
          "synthetic spec requires n >= 1 and d >= 1");
  require(spec.burst_fraction >= 0 && spec.burst_fraction <= 1 &&
              spec.signal_fraction >= 0 && spec.signal_fraction <= 1 &&
              spec.burst_fraction + spec.signal_fraction <= 1,
          errc::invalid_argument,
          "synthetic fractions must lie in [0,1] and sum to at most 1");
  require(spec.noise_scale >= 0, errc::invalid_argument,
          "noise_scale must be non-negative");
  require(spec.class_id >= 0, errc::invalid_argument,
          "class_id must be non-negative");
}

/// The shared burst direction: the normalized all-ones vector.
template <typename Scalar>
Vector<Scalar> burst_direction(Index d) {
  return Vector<Scalar>::Constant(d, Scalar(1) / std::sqrt(Scalar(d)));
}

inline constexpr int kSignalDirectionsPerClass = 2;

/// Class-specific signal axes: standard basis vectors at indices
/// 2c and 2c+1 (mod d). Classes are pairwise orthogonal while
/// 2*(class_id+1) <= d.
template <typename Scalar>
Matrix<Scalar> signal_directions(Index d, int class_id) {
  Matrix<Scalar> dirs = Matrix<Scalar>::Zero(kSignalDirectionsPerClass, d);
  for (int j = 0; j < kSignalDirectionsPerClass; ++j) {
    const Index axis =
        (Index(class_id) * kSignalDirectionsPerClass + j) % d;
    dirs(j, axis) = Scalar(1);
  }
  return dirs;
}

/// Deterministically generates a synthetic feature set from the spec.
/// Burst rows have cosine exactly 1/sqrt(1 + 0.05^2) ~ 0.99875 to the burst
/// direction and norms a few times larger than signal rows, so sum pooling
/// is dominated by the burst while the class signal stays recoverable.
template <typename Scalar>
FeatureSet<Scalar> generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const Index n = spec.n, d = spec.d;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Index n_burst = static_cast<Index>(std::lround(spec.burst_fraction * n));
  Index n_signal = static_cast<Index>(std::lround(spec.signal_fraction * n));
  if (n_burst + n_signal > n) n_signal = n - n_burst;

  const Vector<Scalar> v_burst = burst_direction<Scalar>(d);
  const Matrix<Scalar> v_signal = signal_directions<Scalar>(d, spec.class_id);
  const Scalar root_d = std::sqrt(Scalar(d));
  const Scalar noise = Scalar(spec.noise_scale);

  auto gauss_vec = [&](Scalar scale) {
    Vector<Scalar> g(d);
    for (Index j = 0; j < d; ++j) g[j] = scale * Scalar(gauss(rng));
    return g;
  };

  Matrix<Scalar> data(n, d);
  Index row = 0;

  // Burst energy varies image to image: a per-set gain makes the burst a
  // nuisance factor that sum pooling cannot calibrate away.
  const Scalar burst_gain = Scalar(0.5 + unit(rng));
  constexpr Scalar kCollinearityOffset = Scalar(0.05);
  for (Index i = 0; i < n_burst; ++i) {
    Vector<Scalar> w = gauss_vec(Scalar(1));
    w -= w.dot(v_burst) * v_burst;
    Vector<Scalar> dir = v_burst;
    if (const Scalar wn = w.norm(); wn > Scalar(0)) {
      dir += kCollinearityOffset * (w / wn);
      dir /= dir.norm();
    }
    const Scalar magnitude = burst_gain * Scalar(2.0 + 2.0 * unit(rng)) * root_d;
    data.row(row++) = (magnitude * dir).transpose();
  }

  for (Index i = 0; i < n_signal; ++i) {
    const Vector<Scalar> dir =
        v_signal.row(i % kSignalDirectionsPerClass).transpose();
    const Scalar magnitude = Scalar(0.5 + 0.5 * unit(rng)) * root_d;
    data.row(row++) = (magnitude * dir + gauss_vec(noise)).transpose();
  }

  while (row < n) data.row(row++) = gauss_vec(noise).transpose();

  return make_feature_set<Scalar>(std::move(data), ZeroRowPolicy::reject,
                                  Scalar(0));
}

}  // namespace dempool

#endif  // DEMPOOL_FEATURES_HPP
