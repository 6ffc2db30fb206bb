#include "progfill/params.hpp"

#include <cstring>

namespace progfill {

template <typename T>
Var<T> ParamStore<T>::add(const std::string& name, Tensor<T> value) {
  if (contains(name)) throw InvalidInput("duplicate parameter: " + name);
  auto var = leaf(std::move(value), true);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, var);
  return var;
}

template <typename T>
const Var<T>& ParamStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidInput("unknown parameter: " + name);
  return entries_[it->second].second;
}

template <typename T>
std::size_t ParamStore<T>::numel() const {
  std::size_t total = 0;
  for (const auto& e : entries_) total += e.second->value.size();
  return total;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_) e.second->zero_grad();
}

template <typename T>
void ParamStore<T>::set_requires_grad(bool on) {
  for (auto& e : entries_) e.second->requires_grad = on;
}

template <typename T>
std::uint64_t ParamStore<T>::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [name, var] : entries_) {
    mix(name.data(), name.size());
    mix(var->value.data(), var->value.size() * sizeof(T));
  }
  return h;
}

template <typename T>
void ParamStore<T>::assign(const std::string& name, const Tensor<T>& value) {
  const auto& var = get(name);
  if (!(var->value.shape() == value.shape()))
    throw InvalidInput("parameter " + name + ": shape " + value.shape().str() + " does not match " +
                       var->value.shape().str());
  var->value = value;
}

template <typename T>
Tensor<T> gaussian_tensor(Shape shape, double stddev, Rng& rng) {
  Tensor<T> t(shape);
  for (auto& v : t.storage()) v = static_cast<T>(rng.normal() * stddev);
  return t;
}

template class ParamStore<float>;
template class ParamStore<double>;
template Tensor<float> gaussian_tensor<float>(Shape, double, Rng&);
template Tensor<double> gaussian_tensor<double>(Shape, double, Rng&);

}  // namespace progfill
