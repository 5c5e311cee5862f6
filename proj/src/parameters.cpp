#include "grec/parameters.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "grec/error.hpp"
#include "grec/hash.hpp"

namespace grec::nn {

namespace {

constexpr char kMagic[8] = {'G', 'R', 'E', 'C', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("checkpoint truncated");
  return v;
}

}  // namespace

Matrix uniform_scaled(std::size_t rows, std::size_t cols, std::uint64_t seed,
                      const std::string& name) {
  std::mt19937_64 rng(fnv1a64(name, seed));
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = dist(rng);
  return m;
}

Parameter& ParameterStore::add(const std::string& name, std::size_t rows, std::size_t cols,
                               InitScheme scheme, std::uint64_t seed, bool trainable,
                               double constant) {
  if (index_.count(name)) throw Error("duplicate parameter name: " + name);
  if (rows == 0 || cols == 0) throw Error("parameter " + name + " has an empty shape");
  Parameter p{name, Matrix(rows, cols), trainable};
  switch (scheme) {
    case InitScheme::UniformScaled:
      p.value = uniform_scaled(rows, cols, seed, name);
      break;
    case InitScheme::Zeros:
      break;
    case InitScheme::Constant:
      p.value.fill(constant);
      break;
    case InitScheme::Pretrained:
      throw Error("pretrained initialization requires an embedding table: " + name);
  }
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter& ParameterStore::add_pretrained(const std::string& name, const Matrix& rows,
                                          bool trainable) {
  if (index_.count(name)) throw Error("duplicate parameter name: " + name);
  if (rows.rows() == 0 || rows.cols() == 0)
    throw Error("pretrained initialization requires a non-empty embedding table: " + name);
  index_[name] = params_.size();
  params_.push_back(Parameter{name, rows, trainable});
  return params_.back();
}

Parameter& ParameterStore::get(const std::string& name) { return params_[index_of(name)]; }

const Parameter& ParameterStore::get(const std::string& name) const {
  return params_[index_of(name)];
}

std::size_t ParameterStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter: " + name);
  return it->second;
}

std::size_t ParameterStore::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p.trainable || !trainable_only) n += p.value.size();
  return n;
}

GradBuffer ParameterStore::zero_grads() const {
  GradBuffer g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.emplace_back(p.value.rows(), p.value.cols());
  return g;
}

void ParameterStore::save(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint32_t>(params_.size()));
    for (const auto& p : params_) {
      write_pod(out, static_cast<std::uint32_t>(p.name.size()));
      out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
      write_pod(out, static_cast<std::uint64_t>(p.value.rows()));
      write_pod(out, static_cast<std::uint64_t>(p.value.cols()));
      write_pod(out, static_cast<std::uint8_t>(p.trainable ? 1 : 0));
      out.write(reinterpret_cast<const char*>(p.value.data().data()),
                static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    if (!out) throw Error("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

void ParameterStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("not a checkpoint file: " + path.string());
  if (read_pod<std::uint32_t>(in) != kVersion)
    throw Error("unsupported checkpoint version in " + path.string());
  const auto count = read_pod<std::uint32_t>(in);
  if (count != params_.size())
    throw Error("checkpoint has " + std::to_string(count) + " parameters, model has " +
                std::to_string(params_.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    const bool trainable = read_pod<std::uint8_t>(in) != 0;
    auto& p = get(name);
    if (p.value.rows() != rows || p.value.cols() != cols)
      throw Error("shape mismatch for parameter " + name);
    p.trainable = trainable;
    in.read(reinterpret_cast<char*>(p.value.data().data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!in) throw Error("checkpoint truncated at parameter " + name);
  }
}

}  // namespace grec::nn
