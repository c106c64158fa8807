#include "xpf/errors.hpp"

namespace xpf {

PlacementInfeasible::PlacementInfeasible(int implant_index, const std::string& what)
    : std::runtime_error("implant " + std::to_string(implant_index) + ": " + what),
      implant_index_(implant_index) {}

SceneError::SceneError(int scene_index, const std::string& what)
    : std::runtime_error("scene " + std::to_string(scene_index) + ": " + what),
      scene_index_(scene_index) {}

} // namespace xpf
