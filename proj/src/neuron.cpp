#include "optonet/neuron.hpp"

#include <cmath>

namespace optonet {
namespace {

// x/(1-exp(-x/s)) without the 0/0 singularity; -> s + x/2 as x -> 0
double vtrap(double x, double s) {
    if (std::fabs(x / s) < 1e-6) return s + x / 2.0;
    return x / (1.0 - std::exp(-x / s));
}

struct RateConsts {
    double alpha, beta;
};

// Sodium and delayed-rectifier kinetics are the standard pyramidal-cell
// forms; the A-type, calcium and Ca-gated potassium gates use inf/tau
// sigmoids. All constants are calibration products (documented in README).
RateConsts na_act_rates(double v) {
    return {0.32 * vtrap(v + 54.0, 4.0), 0.28 * vtrap(-(v + 27.0), 5.0)};
}
RateConsts na_inact_rates(double v) {
    return {0.128 * std::exp(-(v + 50.0) / 18.0), 4.0 / (1.0 + std::exp(-(v + 27.0) / 5.0))};
}
RateConsts kdr_act_rates(double v) {
    return {0.032 * vtrap(v + 52.0, 5.0), 0.5 * std::exp(-(v + 57.0) / 40.0)};
}

struct InfTau {
    double inf, tau;
};

InfTau ka_act_kin(double v) { return {1.0 / (1.0 + std::exp(-(v + 50.0) / 20.0)), 5.0}; }
InfTau ka_inact_kin(double v) { return {1.0 / (1.0 + std::exp((v + 80.0) / 6.0)), 15.0}; }
InfTau ca_act_kin(double v) { return {1.0 / (1.0 + std::exp(-(v + 25.0) / 5.0)), 1.0}; }
InfTau kahp_kin(double ca) { return {ca / (ca + 2.0), 80.0}; }
InfTau kc_kin(double ca) { return {ca / (ca + 0.5), 2.0}; }

InfTau gate_kinetics(Gate g, double v, double ca) {
    switch (g) {
        case Gate::na_act: {
            auto r = na_act_rates(v);
            return {r.alpha / (r.alpha + r.beta), 1.0 / (r.alpha + r.beta)};
        }
        case Gate::na_inact: {
            auto r = na_inact_rates(v);
            return {r.alpha / (r.alpha + r.beta), 1.0 / (r.alpha + r.beta)};
        }
        case Gate::kdr_act: {
            auto r = kdr_act_rates(v);
            return {r.alpha / (r.alpha + r.beta), 1.0 / (r.alpha + r.beta)};
        }
        case Gate::ka_act: return ka_act_kin(v);
        case Gate::ka_inact: return ka_inact_kin(v);
        case Gate::ca_act: return ca_act_kin(v);
        case Gate::kahp_act: return kahp_kin(ca);
        case Gate::kc_act: return kc_kin(ca);
        default: return {0.0, 1.0};
    }
}

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace

NeuronParams NeuronParams::defaults() {
    NeuronParams p;
    auto& g = p.channel_peak_conductances;
    g[Channel::Na] = 100.0;
    g[Channel::Kdr] = 80.0;
    g[Channel::KA] = 1.0;
    g[Channel::Kahp] = 0.5;
    g[Channel::Kc] = 1.0;
    g[Channel::Ca] = 0.3;
    g[Channel::ChR2] = 0.6;
    g[Channel::Leak] = 0.2;

    auto& e = p.reversal_potentials;
    e[Channel::Na] = 50.0;
    e[Channel::Kdr] = -100.0;
    e[Channel::KA] = -100.0;
    e[Channel::Kahp] = -100.0;
    e[Channel::Kc] = -100.0;
    e[Channel::Ca] = 120.0;
    e[Channel::ChR2] = 0.0;
    e[Channel::Leak] = -67.0;
    return p;
}

void NeuronParams::validate() const {
    for (int c = 0; c < kChannelCount; ++c) {
        if (channel_peak_conductances.v[c] < 0.0)
            throw ConfigError("neuron.full: channel conductance must be >= 0");
    }
    if (refractory_period <= 0.0) throw ConfigError("neuron.full.refractory_period > 0 required");
    const double e_leak = reversal_potentials[Channel::Leak];
    const double e_na = reversal_potentials[Channel::Na];
    if (!(spike_threshold > e_leak && spike_threshold < e_na))
        throw ConfigError("neuron.full.spike_threshold must lie strictly between leak and Na reversals");
    if (membrane_capacitance <= 0.0) throw ConfigError("neuron.full.membrane_capacitance > 0 required");
    if (tau_ca <= 0.0) throw ConfigError("neuron.full.tau_ca > 0 required");
}

NeuronState resting_state(const NeuronParams& params) {
    NeuronState s;
    s.v = params.reversal_potentials[Channel::Leak];
    for (int i = 0; i < kGateCount; ++i)
        s.gating.v[i] = gate_kinetics(static_cast<Gate>(i), s.v, 0.0).inf;
    // settle to the numerical fixed point
    for (int i = 0; i < 40000; ++i)
        step_conductance_neuron(s, params, 0.0, 0.0, 0.05);
    s.t = 0.0;
    s.last_spike_time.reset();
    return s;
}

bool step_conductance_neuron(NeuronState& state, const NeuronParams& params,
                             double i_syn, double irradiance, double dt) {
    const auto& g = params.channel_peak_conductances;
    const auto& e = params.reversal_potentials;
    const double v = state.v;
    const double ca = state.ca_internal;

    // per-channel conductances at the current state
    const double m = state.gating[Gate::na_act];
    const double h = state.gating[Gate::na_inact];
    const double n = state.gating[Gate::kdr_act];
    const double g_na = g[Channel::Na] * m * m * m * h;
    const double g_kdr = g[Channel::Kdr] * n * n * n * n;
    const double g_ka = g[Channel::KA] * state.gating[Gate::ka_act] * state.gating[Gate::ka_inact];
    const double g_kahp = g[Channel::Kahp] * state.gating[Gate::kahp_act];
    const double g_kc = g[Channel::Kc] * state.gating[Gate::kc_act];
    const double s_ca = state.gating[Gate::ca_act];
    const double g_ca = g[Channel::Ca] * s_ca * s_ca;
    const double g_chr2 = g[Channel::ChR2] * state.chr2.open;
    const double g_leak = g[Channel::Leak];

    const double i_ca = g_ca * (v - e[Channel::Ca]);

    // membrane update: C dV/dt = A - G*V with
    //   G = sum of open conductances + gc,  A = sum g*E - i_syn
    const double g_total = g_na + g_kdr + g_ka + g_kahp + g_kc + g_ca + g_chr2 + g_leak +
                           params.coupling_conductance_gc;
    const double drive = g_na * e[Channel::Na] + g_kdr * e[Channel::Kdr] + g_ka * e[Channel::KA] +
                         g_kahp * e[Channel::Kahp] + g_kc * e[Channel::Kc] +
                         g_ca * e[Channel::Ca] + g_chr2 * e[Channel::ChR2] +
                         g_leak * e[Channel::Leak] - i_syn;

    double v_next;
    if (params.integrator == Integrator::exponential) {
        const double v_inf = drive / g_total;
        v_next = v_inf + (v - v_inf) * std::exp(-g_total * dt / params.membrane_capacitance);
    } else {
        v_next = v + dt * (drive - g_total * v) / params.membrane_capacitance;
    }

    // gating update from the pre-step voltage/calcium
    for (int i = 0; i < kGateCount; ++i) {
        const auto kin = gate_kinetics(static_cast<Gate>(i), v, ca);
        double& x = state.gating.v[i];
        if (params.integrator == Integrator::exponential) {
            x = kin.inf + (x - kin.inf) * std::exp(-dt / kin.tau);
        } else {
            x = clamp01(x + dt * (kin.inf - x) / kin.tau);
        }
    }

    // calcium pool: influx from inward I_Ca, linear decay
    {
        const double influx = std::max(0.0, -params.ca_influx_scale * i_ca);  // 1/ms
        const double ca_inf = influx * params.tau_ca;
        state.ca_internal = ca_inf + (ca - ca_inf) * std::exp(-dt / params.tau_ca);
    }

    // photocycle: rates are <= ~1/ms, forward Euler at dt <= 0.5 is stable;
    // the flux terms cancel pairwise so closed+open+desensitized is conserved
    {
        const double k_open = params.chr2_rates.opening_per_irradiance * irradiance;
        const double f_co = k_open * state.chr2.closed * dt;
        const double f_od = params.chr2_rates.closing * state.chr2.open * dt;
        const double f_dc = params.chr2_rates.recovery * state.chr2.desensitized * dt;
        state.chr2.closed += f_dc - f_co;
        state.chr2.open += f_co - f_od;
        state.chr2.desensitized += f_od - f_dc;
    }

    const double t_next = state.t + dt;
    bool spiked = false;
    if (v < params.spike_threshold && v_next >= params.spike_threshold) {
        if (!state.last_spike_time ||
            (t_next - *state.last_spike_time) >= params.refractory_period) {
            spiked = true;
            state.last_spike_time = t_next;
        }
    }
    state.v = v_next;
    state.t = t_next;

    if (!std::isfinite(state.v) || !std::isfinite(state.ca_internal))
        throw NumericError("conductance neuron state diverged (dt too large?)");
    return spiked;
}

void FastNeuronParams::validate() const {
    if (tau_m <= 0.0) throw ConfigError("neuron.fast.tau_m > 0 required");
    if (refractory <= 0.0) throw ConfigError("neuron.fast.refractory > 0 required");
    if (!(v_thresh > v_rest)) throw ConfigError("neuron.fast.v_thresh must exceed v_rest");
    if (!(v_reset <= v_thresh)) throw ConfigError("neuron.fast.v_reset must not exceed v_thresh");
    if (tau_ca <= 0.0) throw ConfigError("neuron.fast.tau_ca > 0 required");
}

}  // namespace optonet
