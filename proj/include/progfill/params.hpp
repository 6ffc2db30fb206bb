#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "progfill/autograd.hpp"
#include "progfill/rng.hpp"

namespace progfill {

// Named, insertion-ordered trainable arrays.
template <typename T>
class ParamStore {
 public:
  using Entry = std::pair<std::string, Var<T>>;

  ParamStore() = default;
  // Copies are deep: the copy owns fresh parameter nodes.
  ParamStore(const ParamStore& other) { copy_from(other); }
  ParamStore& operator=(const ParamStore& other) {
    if (this != &other) {
      entries_.clear();
      index_.clear();
      copy_from(other);
    }
    return *this;
  }
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Var<T> add(const std::string& name, Tensor<T> value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Var<T>& get(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Total scalar count.
  std::size_t numel() const;

  void zero_grad();
  void set_requires_grad(bool on);

  // FNV-1a over names and raw value bytes.
  std::uint64_t checksum() const;

  // Replaces the value of an existing parameter; shape must match.
  void assign(const std::string& name, const Tensor<T>& value);

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, var] : entries_) {
      auto v = out.add(name, var->value.template cast<U>());
      v->requires_grad = var->requires_grad;
    }
    return out;
  }

 private:
  void copy_from(const ParamStore& other) {
    for (const auto& [name, var] : other.entries_) add(name, var->value)->requires_grad = var->requires_grad;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Zero-mean Gaussian weights with the given standard deviation.
template <typename T>
Tensor<T> gaussian_tensor(Shape shape, double stddev, Rng& rng);

}  // namespace progfill
