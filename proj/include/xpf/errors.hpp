#pragma once

#include <stdexcept>
#include <string>

namespace xpf {

// Error taxonomy. invalid_argument/out_of_range are reused from the standard
// library so callers can catch either the xpf type or the std base.

class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class OutOfBounds : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

class EmptyVoxelization : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class PlacementInfeasible : public std::runtime_error {
  public:
    PlacementInfeasible(int implant_index, const std::string& what);
    int implant_index() const { return implant_index_; }

  private:
    int implant_index_;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Wraps a failure that happened while processing one scene of a dataset.
class SceneError : public std::runtime_error {
  public:
    SceneError(int scene_index, const std::string& what);
    int scene_index() const { return scene_index_; }

  private:
    int scene_index_;
};

} // namespace xpf
