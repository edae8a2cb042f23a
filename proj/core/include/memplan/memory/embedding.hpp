#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memplan::memory {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
Vector normalized(Vector v);
bool is_unit(std::span<const double> v, double tol = 1e-6);

// Text encoder producing L2-normalized vectors. encode() must be a pure
// function of its input.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual Vector encode(std::string_view text) const = 0;
};

// Signed feature hashing over lowercase word unigrams and character
// trigrams. Model-free and deterministic; empty text maps to the first basis
// vector.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256);

  std::size_t dimension() const override { return dim_; }
  Vector encode(std::string_view text) const override;

 private:
  std::size_t dim_;
};

struct HttpEmbedderConfig {
  std::string base_url;
  std::string path = "/v1/embeddings";
  std::string api_key;
  std::string model;
  std::size_t dimension = 0;
  double timeout_seconds = 60.0;
};

// Remote embedding endpoint speaking the common embeddings wire format.
// Results are memoized so repeated inputs yield identical vectors.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderConfig config);

  std::size_t dimension() const override { return config_.dimension; }
  Vector encode(std::string_view text) const override;

 private:
  HttpEmbedderConfig config_;
  mutable std::mutex mu_;
  mutable std::map<std::string, Vector, std::less<>> memo_;
};

}  // namespace memplan::memory
