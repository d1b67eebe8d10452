#include "daestab/csv.hpp"

#include <cstdio>

#include "daestab/errors.hpp"

namespace daestab {

std::string status_name(TrajectoryStatus s) {
    switch (s) {
    case TrajectoryStatus::Completed:
        return "Completed";
    case TrajectoryStatus::EscapeDetected:
        return "EscapeDetected";
    case TrajectoryStatus::SolverFailure:
        return "SolverFailure";
    }
    return "?";
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp)
        throw Error("write_trajectory_csv: cannot open " + path);
    const Index n = traj.states.empty() ? 0 : traj.states.front().size();
    std::fprintf(fp, "t");
    for (Index i = 0; i < n; ++i)
        std::fprintf(fp, ",x%lld", static_cast<long long>(i + 1));
    std::fprintf(fp, ",constraint_residual,dae_residual,step_size\n");
    for (size_t k = 0; k < traj.times.size(); ++k) {
        std::fprintf(fp, "%.17g", traj.times[k]);
        for (Index i = 0; i < n; ++i)
            std::fprintf(fp, ",%.17g", traj.states[k](i));
        std::fprintf(fp, ",%.17g,%.17g,%.17g\n", traj.constraint_residuals[k],
                     traj.dae_residuals[k], traj.step_sizes[k]);
    }
    std::fprintf(fp, "# status=%s", status_name(traj.status).c_str());
    if (traj.escape)
        std::fprintf(fp, " T_estimate=%.17g T_lower=%.17g T_upper=%.17g",
                     traj.escape->T_estimate, traj.escape->T_lower,
                     traj.escape->T_upper);
    if (traj.failure)
        std::fprintf(fp, " t_fail=%.17g reason=\"%s\"", traj.failure->t_fail,
                     traj.failure->reason.c_str());
    std::fprintf(fp, "\n");
    std::fclose(fp);
}

} // namespace daestab
