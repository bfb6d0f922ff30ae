#include "optonet/synapse.hpp"

#include <algorithm>
#include <cmath>

namespace optonet {

void Synapse::record_pre_spike(double t) {
    if (!pre_spike_times.empty() && t < pre_spike_times.back())
        throw NumericError("presynaptic spike times must be appended in order");
    pre_spike_times.push_back(t);
    const double cutoff = t - 8.0 * tau;
    std::size_t drop = 0;
    while (drop < pre_spike_times.size() && pre_spike_times[drop] < cutoff) ++drop;
    if (drop > 0) pre_spike_times.erase(pre_spike_times.begin(), pre_spike_times.begin() + drop);
}

double alpha_conductance(const Synapse& s, double t) {
    double g = 0.0;
    for (double ti : s.pre_spike_times) {
        const double dt = t - ti;
        if (dt < 0.0) continue;        // causality: future spikes do not count
        if (dt > 8.0 * s.tau) continue;  // truncated tail
        const double x = dt / s.tau;
        g += s.g_peak * x * std::exp(-x);
    }
    return g;
}

double layer_net_input(std::span<const Synapse> excitatory,
                       std::span<const Synapse> inhibitory, double t, double v) {
    double i = 0.0;
    for (const Synapse& s : excitatory)
        i += excitatory_current(alpha_conductance(s, t), v, s.e_syn);
    for (const Synapse& s : inhibitory)
        i += inhibitory_current(alpha_conductance(s, t), v, s.e_syn);
    return i;
}

}  // namespace optonet
