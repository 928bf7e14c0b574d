#include "dgad/params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dgad {

namespace {

constexpr char kMagic[8] = {'D', 'G', 'A', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& is) {
    const auto n = take<std::uint32_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return s;
}

}  // namespace

Tensor ParameterStore::add(const std::string& name, Tensor value) {
    if (contains(name)) throw std::invalid_argument("parameter '" + name + "' already registered");
    if (!value.requires_grad()) value = Tensor::from(value.rows(), value.cols(),
                                                     {value.data().begin(), value.data().end()}, true);
    index_[name] = entries_.size();
    entries_.emplace_back(name, std::move(value));
    return entries_.back().second;
}

Tensor ParameterStore::add_glorot(const std::string& name, std::size_t fan_in,
                                   std::size_t fan_out, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(fan_in * fan_out);
    for (double& x : v) x = dist(rng);
    return add(name, Tensor::from(fan_in, fan_out, std::move(v), true));
}

Tensor ParameterStore::add_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
    return add(name, Tensor::zeros(rows, cols, true));
}

Tensor ParameterStore::add_ones(const std::string& name, std::size_t rows, std::size_t cols) {
    return add(name, Tensor::full(rows, cols, 1.0, true));
}

const Tensor& ParameterStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return entries_[it->second].second;
}

Tensor& ParameterStore::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return entries_[it->second].second;
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& [_, t] : entries_) t.zero_grad();
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
    for (auto& [name, t] : entries_) {
        const Tensor& src = other.get(name);
        if (src.rows() != t.rows() || src.cols() != t.cols()) {
            throw std::invalid_argument("parameter '" + name + "': shape " + t.shape_str() +
                                        " vs " + src.shape_str());
        }
        std::copy(src.data().begin(), src.data().end(), t.mutable_data().begin());
    }
}

ParameterStore ParameterStore::clone() const {
    ParameterStore out;
    for (const auto& [name, t] : entries_) {
        out.add(name, Tensor::from(t.rows(), t.cols(), {t.data().begin(), t.data().end()}, true));
    }
    return out;
}

void ParameterStore::save(const std::filesystem::path& path,
                          const std::map<std::string, double>& metadata) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + path.string());
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(metadata.size()));
    for (const auto& [key, value] : metadata) {
        put_string(os, key);
        put<double>(os, value);
    }
    put<std::uint32_t>(os, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, t] : entries_) {
        put_string(os, name);
        put<std::uint32_t>(os, 2);
        put<std::uint64_t>(os, t.rows());
        put<std::uint64_t>(os, t.cols());
        os.write(reinterpret_cast<const char*>(t.data().data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

std::map<std::string, double> ParameterStore::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
    char magic[sizeof(kMagic)];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path.string());
    }
    if (const auto v = take<std::uint32_t>(is); v != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(v));
    }
    std::map<std::string, double> metadata;
    const auto n_meta = take<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        std::string key = take_string(is);
        metadata[key] = take<double>(is);
    }
    const auto n = take<std::uint32_t>(is);
    std::size_t loaded = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::string name = take_string(is);
        const auto rank = take<std::uint32_t>(is);
        std::vector<std::uint64_t> dims(rank);
        for (auto& d : dims) d = take<std::uint64_t>(is);
        std::uint64_t count = 1;
        for (auto d : dims) count *= d;
        std::vector<double> values(count);
        is.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (!is) throw std::runtime_error("checkpoint: truncated values for '" + name + "'");
        if (!contains(name)) throw std::runtime_error("checkpoint: unexpected parameter '" + name + "'");
        Tensor& t = get(name);
        if (rank != 2 || dims[0] != t.rows() || dims[1] != t.cols()) {
            throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
        }
        std::copy(values.begin(), values.end(), t.mutable_data().begin());
        ++loaded;
    }
    if (loaded != entries_.size()) {
        throw std::runtime_error("checkpoint: " + std::to_string(entries_.size() - loaded) +
                                 " parameters missing from " + path.string());
    }
    return metadata;
}

Adam::Adam(ParameterStore& params, AdamOptions options) : params_(&params), options_(options) {
    for (const auto& [_, t] : params.entries()) {
        m_.emplace_back(t.size(), 0.0);
        v_.emplace_back(t.size(), 0.0);
    }
}

void Adam::step() {
    auto& entries = params_->entries();
    for (const auto& [name, t] : entries) {
        if (!t.requires_grad()) throw std::logic_error("adam: parameter '" + name + "' has no grad");
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Tensor& t = entries[i].second;
        auto g = t.mutable_grad();
        auto w = t.mutable_data();
        for (std::size_t j = 0; j < w.size(); ++j) {
            m_[i][j] = options_.beta1 * m_[i][j] + (1.0 - options_.beta1) * g[j];
            v_[i][j] = options_.beta2 * v_[i][j] + (1.0 - options_.beta2) * g[j] * g[j];
            const double m_hat = m_[i][j] / bc1;
            const double v_hat = v_[i][j] / bc2;
            w[j] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
        }
        t.zero_grad();
    }
}

}  // namespace dgad
