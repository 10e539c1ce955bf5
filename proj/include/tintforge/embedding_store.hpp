#pragma once

// File-backed token-embedding store plus the interpolation and
// Gaussian-softmax blending used to build a target color embedding.
//
// TINTEMB1 layout (little-endian):
//   "TINTEMB1" | u32 entry_count | u32 dim |
//   entry_count x ( u16 name_len | name bytes (UTF-8) | dim x f32 )

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tintforge/error.hpp"
#include "tintforge/text.hpp"

namespace tintforge {

using Vector = std::vector<double>;

class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::uint32_t dim) : dim_(dim) {
    if (dim == 0) throw input_error("embedding dimension must be positive");
  }

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

  void add(std::string name, std::span<const float> values) {
    if (name.empty()) throw input_error("embedding name must be non-empty");
    if (name.size() > std::numeric_limits<std::uint16_t>::max())
      throw input_error("embedding name too long");
    if (values.size() != dim_)
      throw input_error("embedding '" + name + "' has " + std::to_string(values.size()) +
                        " values, store dimension is " + std::to_string(dim_));
    if (!index_.emplace(name, names_.size()).second)
      throw input_error("duplicate embedding name '" + name + "'");
    names_.push_back(std::move(name));
    data_.insert(data_.end(), values.begin(), values.end());
  }

  /// Narrows to f32 on insertion.
  void add(std::string name, std::span<const double> values) {
    std::vector<float> narrowed(values.begin(), values.end());
    add(std::move(name), std::span<const float>(narrowed));
  }

  std::span<const float> lookup(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) throw input_error("no embedding named '" + std::string(name) + "'");
    return {data_.data() + it->second * dim_, dim_};
  }

  Vector vector(std::string_view name) const {
    const auto v = lookup(name);
    return Vector(v.begin(), v.end());
  }

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> names_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// TINTEMB1 serialization

inline constexpr std::array<char, 8> kStoreMagic{'T', 'I', 'N', 'T', 'E', 'M', 'B', '1'};

namespace detail {

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw ParseError(source_, 0, std::string("truncated file while reading ") + what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint16_t u16(const char* what) {
    const auto b = take(2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  std::uint32_t u32(const char* what) {
    const auto b = take(4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  const std::string& source() const noexcept { return source_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

}  // namespace detail

/// Decodes a TINTEMB1 image. `expected_dim`, when non-zero, must match the header.
inline EmbeddingStore decode_store(std::span<const std::uint8_t> bytes,
                                   const std::string& source = "embedding store",
                                   std::uint32_t expected_dim = 0) {
  detail::ByteReader in(bytes, source);
  const auto magic = in.take(kStoreMagic.size(), "magic");
  if (!std::equal(magic.begin(), magic.end(), kStoreMagic.begin()))
    throw ParseError(source, 0, "bad magic (expected TINTEMB1)");
  const std::uint32_t count = in.u32("entry count");
  const std::uint32_t dim = in.u32("dimension");
  if (dim == 0) throw ParseError(source, 0, "dimension must be positive");
  if (expected_dim != 0 && dim != expected_dim)
    throw ParseError(source, 0, "dimension mismatch: file has " + std::to_string(dim) +
                                    ", expected " + std::to_string(expected_dim));
  EmbeddingStore store(dim);
  std::vector<float> values(dim);
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint16_t name_len = in.u16("name length");
    const auto name_bytes = in.take(name_len, "name");
    std::string name(name_bytes.begin(), name_bytes.end());
    for (auto& v : values) v = in.f32("vector");
    try {
      store.add(std::move(name), std::span<const float>(values));
    } catch (const Error& err) {
      throw ParseError(source, 0, err.what());
    }
  }
  if (!in.at_end()) throw ParseError(source, 0, "trailing bytes after last entry");
  return store;
}

inline std::vector<std::uint8_t> encode_store(const EmbeddingStore& store) {
  std::vector<std::uint8_t> out(kStoreMagic.begin(), kStoreMagic.end());
  detail::put_u32(out, static_cast<std::uint32_t>(store.size()));
  detail::put_u32(out, store.dim());
  for (const auto& name : store.names()) {
    detail::put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    for (float v : store.lookup(name)) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

inline EmbeddingStore load_store(const std::filesystem::path& path, std::uint32_t expected_dim = 0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open embedding store '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_store(bytes, path.string(), expected_dim);
}

inline void save_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  const auto bytes = encode_store(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw input_error("cannot write embedding store '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw input_error("failed writing embedding store '" + path.string() + "'");
}

/// FNV-1a over the little-endian f32 image of a vector, as it would be saved.
inline std::uint64_t vector_checksum(std::span<const double> v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double d : v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(d));
    for (int shift = 0; shift < 32; shift += 8) {
      h ^= (bits >> shift) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Vector geometry

enum class EmbeddingMetric { Cosine, Euclidean };

inline std::string_view to_string(EmbeddingMetric m) {
  return m == EmbeddingMetric::Cosine ? "cosine" : "euclidean";
}

inline EmbeddingMetric parse_metric(std::string_view s) {
  if (s == "cosine") return EmbeddingMetric::Cosine;
  if (s == "euclidean") return EmbeddingMetric::Euclidean;
  throw input_error("unknown embedding metric '" + std::string(s) + "'");
}

template <class A, class B>
double embedding_distance(std::span<const A> a, std::span<const B> b, EmbeddingMetric metric) {
  if (a.size() != b.size()) throw input_error("embedding dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
    sq += (x - y) * (x - y);
  }
  if (metric == EmbeddingMetric::Euclidean) return std::sqrt(sq);
  if (na == 0.0 || nb == 0.0) throw input_error("cosine distance of a zero vector is undefined");
  return 1.0 - dot / std::sqrt(na * nb);
}

/// alpha * a + (1 - alpha) * b, componentwise.
inline Vector lerp(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() != b.size()) throw input_error("lerp: dimension mismatch");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw input_error("lerp: alpha must lie in [0, 1]");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i] + (1.0 - alpha) * b[i];
  return out;
}

/// Name of the store entry closest to `v`; ties go to the earlier entry.
inline std::string nearest_entry(const EmbeddingStore& store, std::span<const double> v,
                                 EmbeddingMetric metric = EmbeddingMetric::Cosine) {
  if (store.empty()) throw input_error("embedding store is empty");
  std::string best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& name : store.names()) {
    const double d = embedding_distance(store.lookup(name), v, metric);
    if (d < best_d) {
      best_d = d;
      best = name;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Gaussian-softmax blending

struct BlendAnchor {
  std::string name;
  double distance = 0.0;  // ΔE₀₀ from the target color
};

struct BlendSpec {
  std::vector<BlendAnchor> anchors;
  double sigma = 20.0;  // ΔE₀₀ units

  void validate() const {
    if (anchors.empty()) throw input_error("blend spec needs at least one anchor");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw input_error("sigma must be positive");
    for (const auto& a : anchors)
      if (!(a.distance >= 0.0) || !std::isfinite(a.distance))
        throw input_error("anchor distances must be finite and non-negative");
  }
};

/// softmax(-d_i^2 / (2 sigma^2)), max-shifted for stability.
inline std::vector<double> gaussian_weights(std::span<const double> distances, double sigma) {
  if (distances.empty()) throw input_error("gaussian_weights: no distances");
  if (!(sigma > 0.0)) throw input_error("gaussian_weights: sigma must be positive");
  std::vector<double> logits(distances.size());
  const double denom = 2.0 * sigma * sigma;
  for (std::size_t i = 0; i < distances.size(); ++i)
    logits[i] = -(distances[i] * distances[i]) / denom;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - peak);
    sum += l;
  }
  for (auto& l : logits) l /= sum;
  return logits;
}

inline std::vector<double> gaussian_weights(const BlendSpec& spec) {
  spec.validate();
  std::vector<double> d;
  d.reserve(spec.anchors.size());
  for (const auto& a : spec.anchors) d.push_back(a.distance);
  return gaussian_weights(d, spec.sigma);
}

/// Σ w_i e_i, accumulated in anchor order.
inline Vector weighted_sum(std::span<const Vector> vectors, std::span<const double> weights) {
  if (vectors.empty() || vectors.size() != weights.size())
    throw input_error("weighted_sum: vectors and weights must be non-empty and equal in count");
  Vector out(vectors.front().size(), 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != out.size()) throw input_error("weighted_sum: dimension mismatch");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += weights[i] * vectors[i][j];
  }
  return out;
}

/// e_target for a blend spec, resolving anchor names in the store.
inline Vector blend_target(const EmbeddingStore& store, const BlendSpec& spec) {
  const auto weights = gaussian_weights(spec);
  std::vector<Vector> vectors;
  vectors.reserve(spec.anchors.size());
  for (const auto& a : spec.anchors) {
    if (!store.contains(a.name))
      throw input_error("blend anchor '" + a.name + "' is not in the embedding store");
    vectors.push_back(store.vector(a.name));
  }
  return weighted_sum(vectors, weights);
}

// ---------------------------------------------------------------------------
// Prompt embedding refinement

enum class SpanPolicy {
  WholeSpan,   // every token of a multi-token color span carries e_target
  FirstToken,  // only the span's first token is replaced
};

/// Replaces the embeddings of a color span in a prompt's token sequence.
inline std::vector<Vector> refine_prompt_embedding(std::vector<Vector> tokens, TokenRange span,
                                                   std::span<const double> target,
                                                   SpanPolicy policy = SpanPolicy::WholeSpan) {
  if (span.count == 0 || span.end() > tokens.size())
    throw input_error("color token span out of range");
  const std::size_t last = policy == SpanPolicy::WholeSpan ? span.end() : span.first + 1;
  for (std::size_t i = span.first; i < last; ++i) {
    if (tokens[i].size() != target.size())
      throw input_error("target embedding dimension does not match prompt tokens");
    tokens[i].assign(target.begin(), target.end());
  }
  return tokens;
}

}  // namespace tintforge
