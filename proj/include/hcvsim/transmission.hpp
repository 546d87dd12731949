#pragma once

#include <utility>
#include <vector>

#include "hcvsim/core.hpp"
#include "hcvsim/population.hpp"
#include "hcvsim/random.hpp"

namespace hcvsim {

struct MedicalEnvParams {
  double m_i = 2.9;
  double m_b = 0.023;
  double m_s = 0.009;
  double m_d = 0.982;
  double q_v_med = 0.0108;
  double q_uns_med = 0.50;
  int N_p_mp = 19;
  double r_d_p = 1800.0;
  double q_t_med = 0.0064;
  double r_b = 0.806;
  /// Blood transfusions' share of medical-environment infections.
  double blood_share = 0.74;
  double medical_share_target = 0.741;
  /// Unsafe flag re-drawn every day; otherwise drawn once per professional.
  bool redraw_unsafe_daily = true;

  void validate() const;
};

struct SocialEnvParams {
  double q_v_soc_idu = 0.486;
  double q_v_soc_nonidu = 0.142;
  double q_ue_I = 0.26;
  double q_ue_g = 0.166;
  double q_c_e = 1.44e-5;
  double q_c_ue = 2.25e-5;
  double idu_age_min = 16.0;
  double idu_age_max = 32.0;
  int idu_duration_days = 3 * kDaysPerYear;
  int network_size = 3;
  double q_shar = 0.41;
  double q_t_shar = 0.02;

  void validate() const;
  /// Daily conversion probability for a non-IDU of the given employment status.
  double daily_conversion(bool employed) const { return q_v_soc_nonidu * (employed ? q_c_e : q_c_ue); }
};

inline constexpr double kMaxNeedleSharing = 0.504;

enum class Environment : std::uint8_t { Medical, Social };

struct MedicalProfessional {
  bool unsafe = false;
  bool contaminated_today = false;
};

/// (m_i + m_b + m_s + m_d) / 360.
double derive_q_v_med(double m_i, double m_b, double m_s, double m_d);

struct ProcedureRates {
  double m_i = 2.9;
  double m_b = 0.023;
  double m_s = 0.009;
  double m_d = 0.982;
  double total() const { return m_i + m_b + m_s + m_d; }
};

/// r_b = share * q_t_med * (sum m) / m_b; throws if the result exceeds one.
double derive_r_b(double q_t_med, const ProcedureRates& m, double blood_share);
/// Inverse of derive_r_b.
double derive_q_t_med(double r_b, const ProcedureRates& m, double blood_share);

/// Solves q_c = q_c_ue * q_ue_g + q_c_e * (1 - q_ue_g), q_c_ue = (q_ue_I / q_ue_g) q_c_e.
/// Returns (q_c_e, q_c_ue).
std::pair<double, double> derive_idu_conversion(double q_c, double q_ue_I, double q_ue_g);

/// Professionals needed for `population` residents and `visitors` patients today.
int professional_count(std::size_t population, std::size_t visitors, const MedicalEnvParams& p);

struct MedicalDayStats {
  std::size_t visitors = 0;
  int professionals = 0;
  int contaminated = 0;
};

/// One day in the medical environment. Visitors are drawn from the living agents in random
/// order; professional i/N_p_mp sees visitor i. An infectious visitor contaminates an unsafe
/// professional, and every susceptible visitor of that professional that day is infected
/// with q_t_med. Newly infected ids are appended to `infected`.
MedicalDayStats medical_step(Population& pop, std::vector<MedicalProfessional>& professionals,
                             const MedicalEnvParams& p, Rng& rng, std::vector<AgentId>& infected);

/// Processes one visit sequence for a single professional; exposed for tests.
void medical_visits(const Population& pop, MedicalProfessional& prof, std::span<const AgentId> visitors,
                    double q_t_med, Rng& rng, std::vector<AgentId>& infected);

struct SocialDayStats {
  std::size_t visitors = 0;
  std::size_t groups = 0;
  std::size_t sharing_groups = 0;
};

/// One day of needle sharing among current IDUs.
SocialDayStats social_step(const Population& pop, const SocialEnvParams& p, Rng& rng,
                           std::vector<AgentId>& infected);

/// Needle sharing inside one group that has decided to share.
void share_needles(const Population& pop, std::span<const AgentId> group, double q_t_shar, Rng& rng,
                   std::vector<AgentId>& infected);

/// Days until an eligible non-IDU converts (geometric on the daily conversion probability).
std::int64_t sample_conversion_delay(bool employed, const SocialEnvParams& p, Rng& rng);

}  // namespace hcvsim
