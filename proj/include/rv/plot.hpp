#pragma once

#include "rv/tts.hpp"

#include <string>
#include <vector>

namespace rv {

// One probe action around a fixed observation with its predicted direction
// and reward.
struct FieldProbe {
    double ax = 0, ay = 0;  // probe action pose
    double ux = 0, uy = 0;  // predicted unit direction
    double reward = 0;
    bool degenerate = false;
};

struct DirectionFieldDump {
    double bound = 0.15;  // probe grid spans [-bound, bound]^2
    int resolution = 12;
    std::vector<FieldProbe> probes;  // row-major over the grid
};

// Scores a deterministic grid of probe actions (d_dir == 2 only).
DirectionFieldDump dump_direction_field(const Verifier& verifier, const Observation& obs,
                                        StepStamp stamp, double probe_gripper, double bound,
                                        int resolution);

void write_field_csv(const std::string& path, const DirectionFieldDump& dump,
                     const std::string& config_hash);
void write_field_svg(const std::string& path, const DirectionFieldDump& dump);

// Success-vs-budget curves, one series per mode.
void write_scaling_svg(const std::string& path, const std::vector<EvalRow>& rows);

}  // namespace rv
