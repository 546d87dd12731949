#include "hcvsim/transmission.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace hcvsim {

void MedicalEnvParams::validate() const {
  require(m_i >= 0 && m_b >= 0 && m_s >= 0 && m_d >= 0, "procedure rates must be nonnegative");
  for (double p : {q_v_med, q_uns_med, q_t_med, r_b, blood_share, medical_share_target}) {
    require(is_probability(p), "medical-environment probability out of [0,1]");
  }
  require(N_p_mp >= 1, "N_p_mp must be at least 1");
  require(r_d_p >= 1.0, "r_d_p must be at least 1");
}

void SocialEnvParams::validate() const {
  for (double p : {q_v_soc_idu, q_v_soc_nonidu, q_ue_I, q_ue_g, q_c_e, q_c_ue, q_shar, q_t_shar}) {
    require(is_probability(p), "social-environment probability out of [0,1]");
  }
  require(q_shar <= kMaxNeedleSharing + 1e-12, "q_shar exceeds 0.504");
  require(idu_age_min >= 0 && idu_age_max > idu_age_min, "bad IDU age window");
  require(idu_duration_days > 0, "IDU duration must be positive");
  require(network_size >= 1, "network size must be positive");
}

double derive_q_v_med(double m_i, double m_b, double m_s, double m_d) {
  require(m_i >= 0 && m_b >= 0 && m_s >= 0 && m_d >= 0, "procedure rates must be nonnegative");
  return (m_i + m_b + m_s + m_d) / kDaysPerYear;
}

double derive_r_b(double q_t_med, const ProcedureRates& m, double blood_share) {
  require(m.m_b > 0.0, "m_b must be positive");
  require(blood_share > 0.0 && blood_share <= 1.0, "blood share must be in (0,1]");
  const double r_b = blood_share * q_t_med * m.total() / m.m_b;
  if (r_b > 1.0) throw ValidationError("infeasible parameterization: r_b > 1");
  return r_b;
}

double derive_q_t_med(double r_b, const ProcedureRates& m, double blood_share) {
  require(m.m_b > 0.0, "m_b must be positive");
  require(blood_share > 0.0 && blood_share <= 1.0, "blood share must be in (0,1]");
  return r_b * m.m_b / (blood_share * m.total());
}

std::pair<double, double> derive_idu_conversion(double q_c, double q_ue_I, double q_ue_g) {
  require(is_probability(q_c) && q_ue_I > 0 && q_ue_I < 1 && q_ue_g > 0 && q_ue_g < 1,
          "conversion inputs out of range");
  Eigen::Matrix2d a;
  a << 1.0 - q_ue_g, q_ue_g,
       q_ue_I / q_ue_g, -1.0;
  const Eigen::Vector2d b(q_c, 0.0);
  const Eigen::Vector2d x = a.partialPivLu().solve(b);
  return {x(0), x(1)};
}

int professional_count(std::size_t population, std::size_t visitors, const MedicalEnvParams& p) {
  const auto by_population = static_cast<int>(std::ceil(static_cast<double>(population) / p.r_d_p));
  const auto by_load = static_cast<int>((visitors + static_cast<std::size_t>(p.N_p_mp) - 1) /
                                        static_cast<std::size_t>(p.N_p_mp));
  return std::max({1, by_population, by_load});
}

void medical_visits(const Population& pop, MedicalProfessional& prof, std::span<const AgentId> visitors,
                    double q_t_med, Rng& rng, std::vector<AgentId>& infected) {
  if (!prof.unsafe) return;
  for (AgentId id : visitors) {
    if (pop[id].infectious()) {
      prof.contaminated_today = true;
      break;
    }
  }
  if (!prof.contaminated_today) return;
  for (AgentId id : visitors) {
    if (pop[id].susceptible() && rng.bernoulli(q_t_med)) infected.push_back(id);
  }
}

MedicalDayStats medical_step(Population& pop, std::vector<MedicalProfessional>& professionals,
                             const MedicalEnvParams& p, Rng& rng, std::vector<AgentId>& infected) {
  MedicalDayStats stats;
  const std::size_t n = pop.alive_count();
  const auto v = static_cast<std::size_t>(rng.binomial(static_cast<std::int64_t>(n), p.q_v_med));
  static thread_local std::vector<AgentId> visitors;
  pop.sample_living(v, rng, visitors);
  stats.visitors = visitors.size();
  const int count = professional_count(n, visitors.size(), p);
  stats.professionals = count;
  const std::size_t old_size = professionals.size();
  if (professionals.size() < static_cast<std::size_t>(count)) professionals.resize(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < professionals.size(); ++i) {
    auto& prof = professionals[i];
    prof.contaminated_today = false;
    if (p.redraw_unsafe_daily || i >= old_size) prof.unsafe = rng.bernoulli(p.q_uns_med);
  }
  const auto per = static_cast<std::size_t>(p.N_p_mp);
  for (std::size_t start = 0, j = 0; start < visitors.size(); start += per, ++j) {
    const std::size_t len = std::min(per, visitors.size() - start);
    auto& prof = professionals[j];
    medical_visits(pop, prof, std::span<const AgentId>(visitors).subspan(start, len), p.q_t_med, rng, infected);
    if (prof.contaminated_today) ++stats.contaminated;
  }
  return stats;
}

void share_needles(const Population& pop, std::span<const AgentId> group, double q_t_shar, Rng& rng,
                   std::vector<AgentId>& infected) {
  const bool source = std::any_of(group.begin(), group.end(), [&](AgentId id) { return pop[id].infectious(); });
  if (!source) return;
  for (AgentId id : group) {
    if (pop[id].susceptible() && rng.bernoulli(q_t_shar)) infected.push_back(id);
  }
}

SocialDayStats social_step(const Population& pop, const SocialEnvParams& p, Rng& rng,
                           std::vector<AgentId>& infected) {
  SocialDayStats stats;
  static thread_local std::vector<AgentId> visitors;
  visitors.clear();
  for (AgentId id : pop.idus()) {
    if (rng.bernoulli(p.q_v_soc_idu)) visitors.push_back(id);
  }
  stats.visitors = visitors.size();
  rng.shuffle(std::span<AgentId>(visitors));
  const auto size = static_cast<std::size_t>(p.network_size);
  for (std::size_t start = 0; start < visitors.size(); start += size) {
    const std::size_t len = std::min(size, visitors.size() - start);
    ++stats.groups;
    if (len < 2) continue;
    if (!rng.bernoulli(p.q_shar)) continue;
    ++stats.sharing_groups;
    share_needles(pop, std::span<const AgentId>(visitors).subspan(start, len), p.q_t_shar, rng, infected);
  }
  return stats;
}

std::int64_t sample_conversion_delay(bool employed, const SocialEnvParams& p, Rng& rng) {
  return rng.geometric(p.daily_conversion(employed));
}

}  // namespace hcvsim
