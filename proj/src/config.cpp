#include "hcvsim/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace hcvsim {

using nlohmann::json;

namespace {

struct Field {
  std::function<json(const SimConfig&)> get;
  std::function<void(SimConfig&, const json&)> set;
};

template <class T>
Field field(T SimConfig::*member) {
  return {[member](const SimConfig& c) { return json(c.*member); },
          [member](SimConfig& c, const json& v) { c.*member = v.get<T>(); }};
}

template <class Owner, class T>
Field field(Owner SimConfig::*owner, T Owner::*member) {
  return {[owner, member](const SimConfig& c) { return json((c.*owner).*member); },
          [owner, member](SimConfig& c, const json& v) { (c.*owner).*member = v.get<T>(); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["initial_cohort_size"] = field(&SimConfig::initial_cohort_size);
    f["initial_idu_count"] = field(&SimConfig::initial_idu_count);
    f["initial_infected_count"] = field(&SimConfig::initial_infected_count);
    f["initial_age_min"] = field(&SimConfig::initial_age_min);
    f["initial_age_max"] = field(&SimConfig::initial_age_max);
    f["calibration_years"] = field(&SimConfig::calibration_years);
    f["intervention_years"] = field(&SimConfig::intervention_years);
    f["time_step"] = field(&SimConfig::time_step);
    f["birth_rate"] = field(&SimConfig::birth_rate);
    f["death_rate"] = field(&SimConfig::death_rate);
    f["mortality_split_age"] = field(&SimConfig::mortality_split_age);
    f["mortality_ratio"] = field(&SimConfig::mortality_ratio);
    f["mortality_young"] = field(&SimConfig::mortality_young);
    f["mortality_old"] = field(&SimConfig::mortality_old);

    f["m_i"] = field(&SimConfig::medical, &MedicalEnvParams::m_i);
    f["m_b"] = field(&SimConfig::medical, &MedicalEnvParams::m_b);
    f["m_s"] = field(&SimConfig::medical, &MedicalEnvParams::m_s);
    f["m_d"] = field(&SimConfig::medical, &MedicalEnvParams::m_d);
    f["q_v_med"] = field(&SimConfig::medical, &MedicalEnvParams::q_v_med);
    f["q_uns_med"] = field(&SimConfig::medical, &MedicalEnvParams::q_uns_med);
    f["N_p_mp"] = field(&SimConfig::medical, &MedicalEnvParams::N_p_mp);
    f["r_d_p"] = field(&SimConfig::medical, &MedicalEnvParams::r_d_p);
    f["q_t_med"] = field(&SimConfig::medical, &MedicalEnvParams::q_t_med);
    f["r_b"] = field(&SimConfig::medical, &MedicalEnvParams::r_b);
    f["blood_share"] = field(&SimConfig::medical, &MedicalEnvParams::blood_share);
    f["medical_share_target"] = field(&SimConfig::medical, &MedicalEnvParams::medical_share_target);
    f["professional_unsafe_redraw_daily"] = field(&SimConfig::medical, &MedicalEnvParams::redraw_unsafe_daily);

    f["q_v_soc_idu"] = field(&SimConfig::social, &SocialEnvParams::q_v_soc_idu);
    f["q_v_soc_nonidu"] = field(&SimConfig::social, &SocialEnvParams::q_v_soc_nonidu);
    f["q_ue_I"] = field(&SimConfig::social, &SocialEnvParams::q_ue_I);
    f["q_ue_g"] = field(&SimConfig::social, &SocialEnvParams::q_ue_g);
    f["q_c_e"] = field(&SimConfig::social, &SocialEnvParams::q_c_e);
    f["q_c_ue"] = field(&SimConfig::social, &SocialEnvParams::q_c_ue);
    f["idu_age_min"] = field(&SimConfig::social, &SocialEnvParams::idu_age_min);
    f["idu_age_max"] = field(&SimConfig::social, &SocialEnvParams::idu_age_max);
    f["idu_duration_days"] = field(&SimConfig::social, &SocialEnvParams::idu_duration_days);
    f["network_size"] = field(&SimConfig::social, &SocialEnvParams::network_size);
    f["q_shar"] = field(&SimConfig::social, &SocialEnvParams::q_shar);
    f["q_t_shar"] = field(&SimConfig::social, &SocialEnvParams::q_t_shar);

    f["svr_f0_f3"] = field(&SimConfig::svr, &SvrTable::f0_f3);
    f["svr_f4_g3"] = field(&SimConfig::svr, &SvrTable::f4_g3);
    f["svr_f4_other"] = field(&SimConfig::svr, &SvrTable::f4_other);
    f["svr_dc"] = field(&SimConfig::svr, &SvrTable::dc);

    f["transition_model_file"] = field(&SimConfig::transition_model_file);
    f["cost_table_file"] = field(&SimConfig::cost_table_file);
    f["utility_table_file"] = field(&SimConfig::utility_table_file);
    f["daa_course_cost"] = field(&SimConfig::daa_course_cost);
    f["discount_rate"] = field(&SimConfig::discount_rate);
    f["wtp_per_qaly"] = field(&SimConfig::wtp_per_qaly);

    f["transmission_enabled_in_intervention"] = field(&SimConfig::transmission_enabled_in_intervention);
    f["treatment_model"] = {
        [](const SimConfig& c) { return json(std::string(to_string(c.treatment_model))); },
        [](SimConfig& c, const json& v) { c.treatment_model = parse_treatment_model(v.get<std::string>()); }};
    f["target_uptake"] = field(&SimConfig::target_uptake);
    f["base_coverage_alpha"] = field(&SimConfig::base_coverage_alpha);
    f["estimator"] = {[](const SimConfig& c) { return json(std::string(to_string(c.estimator))); },
                      [](SimConfig& c, const json& v) { c.estimator = parse_estimator(v.get<std::string>()); }};
    f["oa_age_plus_one"] = field(&SimConfig::oa_age_plus_one);
    f["rng_seed"] = field(&SimConfig::rng_seed);
    f["replication_count"] = field(&SimConfig::replication_count);

    f["repository_file"] = field(&SimConfig::repository_file);
    f["repository_cohort_size"] = field(&SimConfig::repository_cohort_size);
    f["repository_floor"] = field(&SimConfig::repository_floor);
    f["repository_seed"] = field(&SimConfig::repository_seed);
    f["comparator_model"] = field(&SimConfig::comparator_model);
    f["comparator_uptake"] = field(&SimConfig::comparator_uptake);
    return f;
  }();
  return table;
}

}  // namespace

void SimConfig::validate() const {
  require(initial_cohort_size > 0, "initial_cohort_size must be positive");
  require(initial_idu_count >= 0 && initial_infected_count >= 0, "initial counts must be nonnegative");
  require(initial_idu_count + initial_infected_count <= initial_cohort_size,
          "initial IDU and infected counts exceed the cohort");
  require(initial_age_min >= 0.0 && initial_age_max <= kMaxAgeYears && initial_age_min < initial_age_max,
          "initial age range must lie in [0, 102]");
  require(calibration_years > 0 && intervention_years > 0, "calibration and intervention years must be positive");
  require(time_step == 1, "time_step must be 1 day");
  require(birth_rate >= 0.0 && birth_rate <= 1000.0, "birth_rate is per 1000 per year");
  require(death_rate >= 0.0 && death_rate <= 1000.0, "death_rate is per 1000 per year");
  require(mortality_ratio > 0.0, "mortality_ratio must be positive");
  require(replication_count >= 1, "replication_count must be at least 1");
  require(discount_rate >= 0.0, "discount_rate must be nonnegative");
  require(wtp_per_qaly >= 0.0, "wtp_per_qaly must be nonnegative");
  require(daa_course_cost >= 0.0, "daa_course_cost must be nonnegative");
  require(repository_cohort_size >= 0 && repository_floor >= 1, "bad repository size");

  medical.validate();
  social.validate();
  svr.validate();
  treatment().validate();

  const double q_v = derive_q_v_med(medical.m_i, medical.m_b, medical.m_s, medical.m_d);
  require(std::abs(q_v - medical.q_v_med) <= 1e-4, "q_v_med does not match (m_i + m_b + m_s + m_d) / 360");
  require(medical.N_p_mp == static_cast<int>(std::lround(medical.q_v_med * medical.r_d_p)),
          "N_p_mp does not match round(q_v_med * r_d_p)");
  const ProcedureRates rates{medical.m_i, medical.m_b, medical.m_s, medical.m_d};
  const double r_b = derive_r_b(medical.q_t_med, rates, medical.blood_share);
  require(std::abs(r_b - medical.r_b) <= 0.01 * r_b, "r_b does not match q_t_med under the blood-share relation");
  if (social.q_c_e > 0.0) {
    const double ratio = social.q_c_ue / social.q_c_e;
    const double expected = social.q_ue_I / social.q_ue_g;
    require(std::abs(ratio - expected) <= 0.01 * expected, "q_c_ue / q_c_e does not match q_ue_I / q_ue_g");
  }
  mortality();
}

MortalityModel SimConfig::mortality() const {
  if (mortality_young >= 0.0 && mortality_old >= 0.0) {
    return MortalityModel(mortality_young, mortality_old, mortality_split_age);
  }
  return MortalityModel::solve(death_rate / 1000.0, mortality_ratio, mortality_split_age, initial_age_min,
                               initial_age_max);
}

DemographyParams SimConfig::demography() const {
  DemographyParams d;
  d.birth_rate = birth_rate / 1000.0;
  d.death_rate = death_rate / 1000.0;
  d.employment_probability = 1.0 - social.q_ue_g;
  d.mortality = mortality();
  return d;
}

TreatmentModel SimConfig::treatment() const {
  TreatmentModel t;
  t.kind = treatment_model;
  t.uptake = target_uptake;
  t.alpha = base_coverage_alpha;
  t.intervention_years = intervention_years;
  return t;
}

double SimConfig::growth_rate() const { return (birth_rate - death_rate) / 1000.0; }

RepositoryParams SimConfig::repository_params() const {
  RepositoryParams p;
  p.cohort_size = repository_cohort_size;
  p.per_cell_floor = repository_floor;
  p.growth_rate = growth_rate();
  p.seed = repository_seed;
  return p;
}

json config_to_json(const SimConfig& c) {
  json j = json::object();
  for (const auto& [key, field] : fields()) j[key] = field.get(c);
  return j;
}

void apply_json(SimConfig& c, const json& j) {
  require(j.is_object(), "configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = fields().find(key);
    if (it == fields().end()) throw ValidationError("unknown configuration key '" + key + "'");
    try {
      it->second.set(c, value);
    } catch (const json::exception& e) {
      throw ValidationError("bad value for '" + key + "': " + e.what());
    }
  }
}

void apply_overrides(SimConfig& c, const std::vector<std::string>& assignments) {
  json j = json::object();
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + a + "' is not key=value");
    const std::string key = a.substr(0, eq);
    const std::string text = a.substr(eq + 1);
    json v = json::parse(text, nullptr, false);
    j[key] = v.is_discarded() ? json(text) : v;
  }
  apply_json(c, j);
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError(path.string() + " is not valid JSON");
  SimConfig c;
  apply_json(c, j);
  return c;
}

void save_config(const SimConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << config_to_json(c).dump(2) << '\n';
}

}  // namespace hcvsim
