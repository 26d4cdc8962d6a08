#pragma once

#include "openha/action.hpp"
#include "openha/minegrid.hpp"

namespace openha::expert {

// Deterministic scripted policy for every benchmark task. Pure function of
// the current (task, agent, world); throws NoPathError when the navigation
// target is unreachable.
EnvAction scripted_expert(const minegrid::TaskSpec& task,
                          const minegrid::AgentState& agent,
                          const minegrid::World& world);

}  // namespace openha::expert
