#include "disj/json_io.hpp"

#include <fstream>

#include "disj/errors.hpp"

namespace disj {

namespace {

using nlohmann::json;

std::uint64_t mask_bits_from_json(const json& j, int n) {
    if (j.is_string()) return parse_mask(j.get<std::string>(), n).bits;
    if (j.is_number_unsigned() || j.is_number_integer()) {
        const auto v = j.get<std::int64_t>();
        if (v < 0) throw PreconditionError("negative mask value");
        return make_mask(static_cast<std::uint64_t>(v), n).bits;
    }
    throw PreconditionError("mask must be an unsigned integer or a \"{1,3}\" string");
}

}  // namespace

json dist_to_json(const Dist& d) {
    json support = json::array();
    for (const auto& [mask, w] : d.support) {
        support.push_back(json{{"set", mask.bits}, {"w", w}});
    }
    return json{{"n", d.n}, {"support", std::move(support)}};
}

Dist dist_from_json(const json& j) {
    const int n = j.at("n").get<int>();
    std::vector<std::pair<std::uint64_t, double>> entries;
    for (const json& e : j.at("support")) {
        entries.emplace_back(mask_bits_from_json(e.at("set"), n), e.at("w").get<double>());
    }
    return Dist::make(n, std::move(entries));
}

json joint_to_json(const JointDist& jd) {
    json support = json::array();
    for (const auto& e : jd.support) {
        support.push_back(json{{"a", e.a}, {"b", e.b}, {"w", e.w}});
    }
    return json{{"n", jd.n}, {"support", std::move(support)}};
}

JointDist joint_from_json(const json& j) {
    const int n = j.at("n").get<int>();
    std::vector<JointDist::Entry> entries;
    for (const json& e : j.at("support")) {
        entries.push_back(JointDist::Entry{mask_bits_from_json(e.at("a"), n),
                                           mask_bits_from_json(e.at("b"), n),
                                           e.at("w").get<double>()});
    }
    return JointDist::make(n, std::move(entries));
}

GeneratorSpec generator_from_json(const json& j) {
    GeneratorSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    if (j.contains("k")) spec.k = j.at("k").get<int>();
    if (j.contains("support_size")) spec.support_size = j.at("support_size").get<int>();
    if (j.contains("p")) spec.p = j.at("p").get<std::vector<double>>();
    if (j.contains("p_low")) spec.p_low = j.at("p_low").get<double>();
    if (j.contains("p_high")) spec.p_high = j.at("p_high").get<double>();
    if (j.contains("lambda")) spec.lambda = j.at("lambda").get<double>();
    if (j.contains("m")) spec.mixture_support = j.at("m").get<int>();
    return spec;
}

bool generator_is_joint(const GeneratorSpec& spec) {
    return spec.kind == "correlated-mixture";
}

json witness_to_json(const RectangleWitness& w) {
    json out{{"u", w.u.bits},
             {"measure_a", w.measure_a},
             {"measure_b", w.measure_b},
             {"ell", w.ell},
             {"mode", w.mode == RectangleWitness::Mode::Exact ? "exact" : "sampled"}};
    if (w.mode == RectangleWitness::Mode::Sampled) out["meets_bounds"] = w.meets_bounds;
    return out;
}

json witness_report_to_json(const WitnessReport& r) {
    return json{{"recomputed_a", r.recomputed_a},
                {"recomputed_b", r.recomputed_b},
                {"u_within_x", r.u_within_x},
                {"sampled_pairs_disjoint", r.sampled_pairs_disjoint},
                {"measures_match", r.measures_match},
                {"bound_a_met", r.bound_a_met},
                {"bound_b_met", r.bound_b_met},
                {"all_ok", r.all_ok()}};
}

json info_to_json(const InfoReport& r) {
    json out{{"mutual_information_bits", r.mutual_information_bits},
             {"i_infinity_bits", r.i_infinity_bits}};
    if (r.tv_to_reference) out["tv_to_reference"] = *r.tv_to_reference;
    return out;
}

json truncation_to_json(const TruncationResult& t, bool include_nu) {
    json out{{"threshold_c", t.threshold_c},
             {"removed_mass", t.removed_mass},
             {"tv", t.tv},
             {"i_inf_nu", t.i_inf_nu}};
    if (include_nu) out["nu"] = joint_to_json(t.nu);
    return out;
}

json eval_report_to_json(const EvalReport& r) {
    json hist = json::object();
    for (const auto& [name, count] : r.stop_histogram) hist[name] = count;
    json out{{"weighted_error", r.weighted_error},
             {"max_cost_bits", r.max_cost_bits},
             {"mean_cost_bits", r.mean_cost_bits},
             {"stop_histogram", std::move(hist)},
             {"pairs_evaluated", r.pairs_evaluated},
             {"wall_time_seconds", r.wall_time_seconds}};
    if (r.confidence_half_width) out["confidence_half_width"] = *r.confidence_half_width;
    return out;
}

json run_outcome_to_json(const RunOutcome& o) {
    json trace = json::array();
    for (const LevelTrace& t : o.trace) {
        json entry{{"x", t.x.bits}, {"kind", level_kind_name(t.kind)}};
        if (t.kind == LevelKind::Recurse) entry["step"] = t.step_index;
        trace.push_back(std::move(entry));
    }
    return json{{"answer", o.answer_disjoint ? "disjoint" : "not-disjoint"},
                {"correct", o.correct},
                {"cost_bits", o.cost_bits},
                {"trace", std::move(trace)}};
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig config;
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    config.n_values = j.at("n").get<std::vector<int>>();
    config.eps_values = j.at("eps").get<std::vector<double>>();
    for (const json& f : j.at("families")) {
        FamilyConfig fam;
        fam.name = f.at("name").get<std::string>();
        fam.gen = generator_from_json(f.at("generator"));
        config.families.push_back(std::move(fam));
    }
    if (j.contains("mode")) {
        const std::string mode = j.at("mode").get<std::string>();
        if (mode == "sampled") {
            config.sampled = true;
        } else if (mode != "exact") {
            throw PreconditionError("sweep mode must be \"exact\" or \"sampled\"");
        }
    }
    if (j.contains("num_samples")) config.num_samples = j.at("num_samples").get<long long>();
    if (j.contains("C")) config.t_cap_constant = j.at("C").get<double>();
    if (j.contains("keep_going")) config.keep_going = j.at("keep_going").get<bool>();
    return config;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot write " + path);
    out << text;
}

}  // namespace disj
