#include "optonet/plasticity.hpp"

#include <cmath>

namespace optonet {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void PlasticityParams::validate() const {
    if (!(theta_d > 0.0 && theta_d < theta_p))
        throw ConfigError("plasticity: 0 < theta_d < theta_p required");
    if (lambda_decay < 0.0) throw ConfigError("plasticity.lambda_decay >= 0 required");
    if (eta_max <= 0.0) throw ConfigError("plasticity.eta_max > 0 required");
    if (tau_ca_syn <= 0.0) throw ConfigError("plasticity.tau_ca_syn > 0 required");
    if (pairing_window <= 0.0) throw ConfigError("plasticity.pairing_window > 0 required");
    if (episode_dt <= 0.0) throw ConfigError("plasticity.episode_dt > 0 required");
    if (ca_quantum_pre < 0.0 || ca_quantum_pair < 0.0)
        throw ConfigError("plasticity: calcium quanta must be >= 0");
}

double omega(double ca, const PlasticityParams& p) {
    const double lo = sigmoid(p.omega_sharpness * (ca - p.theta_d));
    const double hi = sigmoid(p.omega_sharpness * (ca - p.theta_p));
    return p.omega_depress_depth * (lo - hi) + p.omega_potentiate_level * hi;
}

double eta(double ca, const PlasticityParams& p) {
    const double c2 = ca * ca;
    const double k2 = p.eta_half_ca * p.eta_half_ca;
    return p.eta_max * c2 / (c2 + k2);
}

PairingKind classify_pairing(double t_pre, double t_post, double window) {
    if (t_pre <= t_post && (t_post - t_pre) <= window) return PairingKind::Potentiate;
    if (t_pre > t_post && (t_pre - t_post) <= window) return PairingKind::Depress;
    return PairingKind::NoChange;
}

EpisodeMap episode_map(double ca0, const PlasticityParams& p, double dt_integration) {
    // Eq. (5) is linear in W, so fixed-step Euler over one episode composes to
    // a single affine map w -> decay*w + offset. Accumulating the
    // coefficients once makes every later application O(1) and keeps
    // apply_pairing and dw_single on the same evaluation path.
    const double duration = p.episode_duration();
    EpisodeMap m{1.0, 0.0};
    double t = 0.0;
    while (t < duration) {
        const double dt = std::min(dt_integration, duration - t);
        const double ca = ca0 * std::exp(-t / p.tau_ca_syn);
        const double e = eta(ca, p);
        const double a = 1.0 - dt * e * p.lambda_decay;
        const double b = dt * e * omega(ca, p);
        m.decay = a * m.decay;
        m.offset = a * m.offset + b;
        t += dt;
    }
    return m;
}

double EpisodeMap::delta(double w0) const {
    double w1 = decay * w0 + offset;
    if (w1 < 0.0) w1 = 0.0;  // biological non-negativity
    return w1 - w0;
}

double pairing_episode_delta(double w0, double ca0, const PlasticityParams& p,
                             double dt_integration) {
    return episode_map(ca0, p, dt_integration).delta(w0);
}

double canonical_pairing_ca(PairingKind kind, const PlasticityParams& p) {
    switch (kind) {
        case PairingKind::Potentiate:
            // pre-spike quantum decayed over the standard pairing offset,
            // plus the pairing quantum delivered at the post spike
            return p.ca_quantum_pre * std::exp(-p.canonical_pair_offset / p.tau_ca_syn) +
                   p.ca_quantum_pair;
        case PairingKind::Depress: return p.ca_quantum_pre + p.ca_quantum_pair_depress();
        default: return 0.0;
    }
}

PairingOutcome apply_pairing(Synapse& s, PairingKind kind, const PlasticityParams& p,
                             double dt_integration) {
    if (kind == PairingKind::NoChange) return {PairingKind::NoChange, 0.0};
    const double ca0 = canonical_pairing_ca(kind, p);
    const double dw = pairing_episode_delta(s.g_peak, ca0, p, dt_integration);
    s.g_peak += dw;
    s.ca_trace = ca0 * std::exp(-p.episode_duration() / p.tau_ca_syn);
    return {kind, dw};
}

const EpisodeMap& DwCache::map_for(PairingKind kind) {
    auto& slot = (kind == PairingKind::Potentiate) ? pot_ : dep_;
    if (!slot) slot = episode_map(canonical_pairing_ca(kind, params_), params_, params_.episode_dt);
    return *slot;
}

double DwCache::get(double w, PairingKind kind) {
    if (kind == PairingKind::NoChange) return 0.0;
    return std::fabs(map_for(kind).delta(w));
}

double dw_single(const PlasticityParams& p, double w, PairingKind kind, DwCache* cache) {
    if (kind == PairingKind::NoChange) return 0.0;
    if (cache) return cache->get(w, kind);
    return std::fabs(pairing_episode_delta(w, canonical_pairing_ca(kind, p), p, p.episode_dt));
}

}  // namespace optonet
