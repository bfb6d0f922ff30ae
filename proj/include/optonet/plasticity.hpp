// Calcium-dependent STDP rule
//   dW/dt = eta([Ca]) * (Omega([Ca]) - lambda * W)
// with a double-sigmoid Omega (depression basin between theta_d and theta_p,
// potentiation above theta_p) and a Hill-form learning-rate gate eta.
// A "pairing episode" sets the synaptic calcium trace according to the spike
// ordering and integrates the rule over one trace-decay episode.
#pragma once

#include <optional>

#include "optonet/common.hpp"
#include "optonet/synapse.hpp"

namespace optonet {

enum class PairingKind { Potentiate, Depress, NoChange };

struct PlasticityParams {
    double theta_d = 0.35;  // depression threshold (normalized calcium)
    double theta_p = 0.55;  // potentiation threshold
    double lambda_decay = 0.01;
    double eta_max = 0.002;      // 1/ms
    double eta_half_ca = 0.6;    // calcium at half-max eta
    double omega_depress_depth = -0.25;
    double omega_potentiate_level = 1.0;
    double omega_sharpness = 40.0;  // sigmoid steepness of the two Omega edges
    double pairing_window = 5.0;    // ms
    double ca_quantum_pre = 0.2;    // trace bump per lone pre-spike
    double ca_quantum_pair = 0.55;  // extra bump for a potentiate-ordered pairing
    double tau_ca_syn = 20.0;       // ms
    double episode_dt = 0.05;       // ms, integration step for one episode
    // pre->post offset a canonical pairing is defined at; keep equal to the
    // stimulation protocol's delta_t_pair so ideal-mode episodes match the
    // trace level light-driven pairings actually reach
    double canonical_pair_offset = 4.0;  // ms

    double episode_duration() const { return 5.0 * tau_ca_syn; }
    // Trace level a depress-ordered pairing adds on top of the pre-spike
    // quantum, landing the sum at the middle of the depression basin.
    double ca_quantum_pair_depress() const {
        return 0.5 * (theta_d + theta_p) - ca_quantum_pre;
    }

    void validate() const;
};

struct PairingOutcome {
    PairingKind kind = PairingKind::NoChange;
    double dw = 0.0;  // signed realized conductance change
};

// Omega: ~0 below theta_d, dips to omega_depress_depth inside
// (theta_d, theta_p), rises to omega_potentiate_level above theta_p.
double omega(double ca, const PlasticityParams& p);

// Hill form eta_max * ca^2 / (ca^2 + eta_half_ca^2); monotone, 0 at ca = 0.
double eta(double ca, const PlasticityParams& p);

inline double weight_derivative(double w, double ca, const PlasticityParams& p) {
    return eta(ca, p) * (omega(ca, p) - p.lambda_decay * w);
}

PairingKind classify_pairing(double t_pre, double t_post, double window);

// One integrated episode as the affine map w -> decay*w + offset (clamped at
// zero at the end of the episode).
struct EpisodeMap {
    double decay = 1.0;
    double offset = 0.0;
    double delta(double w0) const;  // signed weight change, clamp included
};

EpisodeMap episode_map(double ca0, const PlasticityParams& p, double dt_integration);

// Signed weight change of one episode starting from trace level ca0.
double pairing_episode_delta(double w0, double ca0, const PlasticityParams& p,
                             double dt_integration);

// Trace level for an idealized pairing of the given kind.
double canonical_pairing_ca(PairingKind kind, const PlasticityParams& p);

// Set the synapse trace per the outcome kind, integrate one episode, clamp
// g_peak at zero. NoChange leaves the synapse untouched.
PairingOutcome apply_pairing(Synapse& s, PairingKind kind, const PlasticityParams& p,
                             double dt_integration);

// Holds the two per-kind episode maps for one params set so the trainer's
// per-pulse dw_single lookups are O(1).
class DwCache {
  public:
    explicit DwCache(const PlasticityParams& p) : params_(p) {}
    double get(double w, PairingKind kind);
    const EpisodeMap& map_for(PairingKind kind);
    const PlasticityParams& params() const { return params_; }

  private:
    PlasticityParams params_;
    std::optional<EpisodeMap> pot_, dep_;
};

double dw_single(const PlasticityParams& p, double w, PairingKind kind,
                 DwCache* cache = nullptr);

}  // namespace optonet
