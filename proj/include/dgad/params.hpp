#pragma once

#include "dgad/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace dgad {

/// Named, ordered collection of learnable leaves.
class ParameterStore {
public:
    /// Registers a fresh trainable tensor; names must be unique.
    Tensor add(const std::string& name, Tensor value);

    /// Glorot-uniform matrix on +-sqrt(6 / (fan_in + fan_out)).
    Tensor add_glorot(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                       std::mt19937_64& rng);
    Tensor add_zeros(const std::string& name, std::size_t rows, std::size_t cols);
    Tensor add_ones(const std::string& name, std::size_t rows, std::size_t cols);

    const Tensor& get(const std::string& name) const;
    Tensor& get(const std::string& name);
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t size() const { return entries_.size(); }
    std::size_t scalar_count() const;
    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }

    void zero_grad();

    /// Copies values (not tensors) from another store with identical names and shapes.
    void copy_values_from(const ParameterStore& other);
    ParameterStore clone() const;

    /// Binary checkpoint; see docs/checkpoint-format.md. Values round-trip bit-exactly.
    void save(const std::filesystem::path& path,
              const std::map<std::string, double>& metadata = {}) const;
    /// Overwrites values of every parameter present in the file. Missing or
    /// mismatched entries throw. Returns the metadata block.
    std::map<std::string, double> load(const std::filesystem::path& path);

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::map<std::string, std::size_t> index_;
};

struct AdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over every tensor of a ParameterStore.
class Adam {
public:
    Adam(ParameterStore& params, AdamOptions options = {});

    /// Applies one update from the accumulated grads, then zeroes them.
    void step();

    std::int64_t steps() const { return step_; }
    const AdamOptions& options() const { return options_; }
    const std::vector<double>& first_moment(std::size_t i) const { return m_[i]; }
    const std::vector<double>& second_moment(std::size_t i) const { return v_[i]; }

private:
    ParameterStore* params_;
    AdamOptions options_;
    std::int64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace dgad
