#include "seizure/error.hpp"
#include "seizure/mapreduce/job.hpp"

namespace seizure::mr {

Registry& Registry::global() {
  static Registry registry;
  return registry;
}

void Registry::add_map(const std::string& name, MapFn fn) { maps_[name] = std::move(fn); }

void Registry::add_reduce(const std::string& name, ReduceFn fn) { reduces_[name] = std::move(fn); }

const MapFn& Registry::map(const std::string& name) const {
  const auto it = maps_.find(name);
  if (it == maps_.end()) throw ParameterError("unknown map function '" + name + "'");
  return it->second;
}

const ReduceFn& Registry::reduce(const std::string& name) const {
  const auto it = reduces_.find(name);
  if (it == reduces_.end()) throw ParameterError("unknown reduce function '" + name + "'");
  return it->second;
}

}  // namespace seizure::mr
