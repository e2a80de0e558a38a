#include <cmath>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "disj/errors.hpp"
#include "disj/json_io.hpp"

namespace {

using nlohmann::json;

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        if (text.empty() || text.back() != '\n') std::cout << '\n';
    } else {
        disj::write_text_file(out_path, text);
    }
}

json spec_argument(const std::string& arg) {
    if (!arg.empty() && arg.front() == '@') return disj::load_json_file(arg.substr(1));
    return json::parse(arg);
}

int cmd_gen_dist(const std::string& spec_arg, int n, std::uint64_t seed,
                 const std::string& out) {
    const disj::GeneratorSpec spec = disj::generator_from_json(spec_argument(spec_arg));
    disj::RandomStream rng(seed, "gen-dist");
    if (disj::generator_is_joint(spec)) {
        emit(out, disj::joint_to_json(disj::realize_joint(spec, n, rng)).dump(2));
    } else {
        emit(out, disj::dist_to_json(disj::realize_marginal(spec, n, rng)).dump(2));
    }
    return 0;
}

int cmd_info(const std::string& joint_path, const std::string& ref_path,
             const std::string& out) {
    const disj::JointDist mu = disj::joint_from_json(disj::load_json_file(joint_path));
    disj::InfoReport report;
    report.mutual_information_bits = disj::mutual_information(mu);
    report.i_infinity_bits = disj::i_infinity(mu);
    if (!ref_path.empty()) {
        const disj::JointDist ref = disj::joint_from_json(disj::load_json_file(ref_path));
        report.tv_to_reference = disj::tv_distance(mu, ref);
    }
    emit(out, disj::info_to_json(report).dump(2));
    return 0;
}

int cmd_extract(const std::string& a_path, const std::string& b_path, double eps,
                const std::string& x_text, const std::string& mode, int retries,
                std::uint64_t seed, bool verify, const std::string& out) {
    const disj::Dist da = disj::dist_from_json(disj::load_json_file(a_path));
    const disj::Dist db = disj::dist_from_json(disj::load_json_file(b_path));
    const disj::GroundSet x{x_text.empty() ? disj::SubsetMask{disj::full_bits(da.n), da.n}
                                           : disj::parse_mask(x_text, da.n)};

    disj::RandomStream rng(seed, "extract");
    disj::RectangleWitness witness;
    if (mode == "exact") {
        witness = disj::extract_exact(da, db, eps, x);
    } else {
        const auto sampled = disj::extract_sampled(da, db, eps, x, rng, retries);
        if (!sampled) {
            std::cerr << "no witness within " << retries << " retries\n";
            return 1;
        }
        witness = *sampled;
    }
    json result = disj::witness_to_json(witness);
    if (verify) {
        result["verification"] =
            disj::witness_report_to_json(disj::verify_witness(da, db, witness, x, eps, rng));
    }
    emit(out, result.dump(2));
    return 0;
}

int cmd_run(const std::string& a_path, const std::string& b_path, double eps,
            std::uint64_t seed, const std::string& input_a, const std::string& input_b,
            double t_cap_constant) {
    const disj::Dist mu_a = disj::dist_from_json(disj::load_json_file(a_path));
    const disj::Dist mu_b = disj::dist_from_json(disj::load_json_file(b_path));
    const disj::SubsetMask a = disj::parse_mask(input_a, mu_a.n);
    const disj::SubsetMask b = disj::parse_mask(input_b, mu_b.n);

    const disj::RunOutcome outcome =
        disj::run_protocol(mu_a, mu_b, eps, seed, a, b, t_cap_constant);
    for (const disj::Message& m : outcome.transcript.messages) {
        std::cout << (m.speaker == disj::Side::A ? 'A' : 'B') << '\t' << m.bits << '\t'
                  << m.label << '\n';
    }
    std::cout << disj::run_outcome_to_json(outcome).dump(2) << '\n';
    return 0;
}

int cmd_eval(const std::string& a_path, const std::string& b_path, double eps,
             std::uint64_t seed, const std::string& mode, long long samples,
             double t_cap_constant, const std::string& out) {
    const disj::Dist mu_a = disj::dist_from_json(disj::load_json_file(a_path));
    const disj::Dist mu_b = disj::dist_from_json(disj::load_json_file(b_path));
    const disj::EvalReport report =
        mode == "sampled"
            ? disj::evaluate_sampled(mu_a, mu_b, eps, seed, samples, t_cap_constant)
            : disj::evaluate_exact(mu_a, mu_b, eps, seed, t_cap_constant);
    emit(out, disj::eval_report_to_json(report).dump(2));
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out, bool keep_going) {
    disj::ExperimentConfig config =
        disj::config_from_json(disj::load_json_file(config_path));
    if (keep_going) config.keep_going = true;
    const disj::SweepResult result = disj::run_sweep(config);
    emit(out, result.csv);
    return 0;
}

int cmd_substate(const std::string& joint_path, double c, double tv_target, bool no_nu,
                 const std::string& out) {
    const disj::JointDist mu = disj::joint_from_json(disj::load_json_file(joint_path));
    const double threshold = c > 0.0 ? c : disj::find_threshold(mu, tv_target);
    const disj::TruncationResult result = disj::truncate_joint(mu, threshold);
    json j = disj::truncation_to_json(result, !no_nu);
    const double k = disj::mutual_information(mu);
    j["mutual_information_bits"] = k;
    if (!(c > 0.0)) {
        j["reference_bound_bits"] = disj::substate_reference_bits(k, tv_target);
    }
    emit(out, j.dump(2));
    return 0;
}

int cmd_run_mi(const std::string& joint_path, double eps, std::uint64_t seed,
               const std::string& mode_text, const std::string& input_a,
               const std::string& input_b, const std::string& eval_mode,
               long long samples, const std::string& out) {
    const disj::JointDist mu = disj::joint_from_json(disj::load_json_file(joint_path));
    const disj::MiMode mode = mode_text == "paper-constants" ? disj::MiMode::PaperConstants
                                                             : disj::MiMode::Measured;
    if (!eval_mode.empty()) {
        const disj::EvalReport report =
            eval_mode == "sampled"
                ? disj::evaluate_mi_sampled(mu, eps, seed, samples, mode)
                : disj::evaluate_mi_exact(mu, eps, seed, mode);
        emit(out, disj::eval_report_to_json(report).dump(2));
        return 0;
    }
    const disj::SubsetMask a = disj::parse_mask(input_a, mu.n);
    const disj::SubsetMask b = disj::parse_mask(input_b, mu.n);
    const disj::RunOutcome outcome = disj::bounded_mi_protocol(mu, eps, seed, a, b, mode);
    emit(out, disj::run_outcome_to_json(outcome).dump(2));
    return 0;
}

int cmd_verify_lemma(int n, double eps, int count, std::uint64_t seed) {
    int accepted = 0;
    int failures = 0;
    std::uint64_t instance_seed = seed;
    const disj::GroundSet x{disj::SubsetMask{disj::full_bits(n), n}};
    while (accepted < count) {
        ++instance_seed;
        const auto [da, db] = disj::biased_product_pair(n, instance_seed);
        if (disj::disjoint_probability(da, db) < eps) continue;
        ++accepted;
        const disj::RectangleWitness w = disj::extract_exact(da, db, eps, x);
        disj::RandomStream rng(instance_seed, "verify-lemma");
        const disj::WitnessReport report = disj::verify_witness(da, db, w, x, eps, rng);
        if (!report.all_ok() || !w.meets_bounds) {
            ++failures;
            std::cout << "FAIL instance " << accepted << " seed " << instance_seed << ": "
                      << disj::witness_report_to_json(report).dump() << '\n';
        }
    }
    std::cout << (failures == 0 ? "PASS" : "FAIL") << " lemma battery: " << count
              << " instances at n=" << n << " eps=" << disj::format_double(eps) << ", "
              << failures << " failures\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-party set-disjointness protocol simulator"};
    app.require_subcommand(1);

    std::string a_path, b_path, joint_path, ref_path, config_path;
    std::string spec_arg, x_text, input_a, input_b, out_path;
    std::string mode = "exact";
    std::string mi_mode = "measured";
    std::string eval_mode;
    double eps = 0.25;
    double c_bits = 0.0;
    double tv_target = 0.125;
    double t_cap_constant = 2.0;
    std::uint64_t seed = 1;
    long long samples = 100000;
    int n = 12;
    int retries = 10000;
    int count = 100;
    bool keep_going = false;
    bool verify = false;
    bool no_nu = false;

    CLI::App* gen = app.add_subcommand("gen-dist", "generate a distribution from a spec");
    gen->add_option("--spec", spec_arg, "generator spec JSON (or @file)")->required();
    gen->add_option("--n", n, "ground-set size")->required();
    gen->add_option("--seed", seed);
    gen->add_option("--out", out_path);

    CLI::App* info = app.add_subcommand("info", "information metrics for a joint");
    info->add_option("joint", joint_path)->required();
    info->add_option("--ref", ref_path, "joint to compare against in total variation");
    info->add_option("--out", out_path);

    CLI::App* extract = app.add_subcommand("extract", "extract a full rectangle witness");
    extract->add_option("--a", a_path)->required();
    extract->add_option("--b", b_path)->required();
    extract->add_option("--eps", eps)->required();
    extract->add_option("--x", x_text, "ground set (default: full)");
    extract->add_option("--mode", mode)->check(CLI::IsMember({"exact", "sampled"}));
    extract->add_option("--retries", retries);
    extract->add_option("--seed", seed);
    extract->add_flag("--verify", verify, "attach a verification report");
    extract->add_option("--out", out_path);

    CLI::App* run = app.add_subcommand("run", "run one protocol execution");
    run->add_option("--a", a_path)->required();
    run->add_option("--b", b_path)->required();
    run->add_option("--eps", eps)->required();
    run->add_option("--seed", seed);
    run->add_option("--input-a", input_a)->required();
    run->add_option("--input-b", input_b)->required();
    run->add_option("--C", t_cap_constant);

    CLI::App* eval = app.add_subcommand("eval", "evaluate error and cost");
    eval->add_option("--a", a_path)->required();
    eval->add_option("--b", b_path)->required();
    eval->add_option("--eps", eps)->required();
    eval->add_option("--seed", seed);
    eval->add_option("--mode", mode)->check(CLI::IsMember({"exact", "sampled"}));
    eval->add_option("--samples", samples);
    eval->add_option("--C", t_cap_constant);
    eval->add_option("--out", out_path);

    CLI::App* sweep = app.add_subcommand("sweep", "run a sweep config to CSV");
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--out", out_path);
    sweep->add_flag("--keep-going", keep_going);

    CLI::App* substate = app.add_subcommand("substate", "truncate a joint");
    substate->add_option("joint", joint_path)->required();
    substate->add_option("--c", c_bits, "explicit threshold in bits");
    substate->add_option("--tv-target", tv_target);
    substate->add_flag("--no-nu", no_nu, "omit nu from the output");
    substate->add_option("--out", out_path);

    CLI::App* run_mi = app.add_subcommand("run-mi", "bounded-mutual-information wrapper");
    run_mi->add_option("--joint", joint_path)->required();
    run_mi->add_option("--eps", eps)->required();
    run_mi->add_option("--seed", seed);
    run_mi->add_option("--mode", mi_mode)
        ->check(CLI::IsMember({"paper-constants", "measured"}));
    run_mi->add_option("--input-a", input_a);
    run_mi->add_option("--input-b", input_b);
    run_mi->add_option("--eval", eval_mode)->check(CLI::IsMember({"exact", "sampled"}));
    run_mi->add_option("--samples", samples);
    run_mi->add_option("--out", out_path);

    CLI::App* lemma = app.add_subcommand("verify-lemma", "rectangle extraction battery");
    lemma->add_option("--n", n);
    lemma->add_option("--eps", eps);
    lemma->add_option("--count", count);
    lemma->add_option("--seed", seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_dist(spec_arg, n, seed, out_path);
        if (info->parsed()) return cmd_info(joint_path, ref_path, out_path);
        if (extract->parsed()) {
            return cmd_extract(a_path, b_path, eps, x_text, mode, retries, seed, verify,
                               out_path);
        }
        if (run->parsed()) {
            return cmd_run(a_path, b_path, eps, seed, input_a, input_b, t_cap_constant);
        }
        if (eval->parsed()) {
            return cmd_eval(a_path, b_path, eps, seed, mode, samples, t_cap_constant,
                            out_path);
        }
        if (sweep->parsed()) return cmd_sweep(config_path, out_path, keep_going);
        if (substate->parsed()) {
            return cmd_substate(joint_path, c_bits, tv_target, no_nu, out_path);
        }
        if (run_mi->parsed()) {
            return cmd_run_mi(joint_path, eps, seed, mi_mode, input_a, input_b, eval_mode,
                              samples, out_path);
        }
        if (lemma->parsed()) return cmd_verify_lemma(n, eps, count, seed);
    } catch (const disj::GuardError& ex) {
        std::cerr << "guard violation: " << ex.what() << '\n';
        return 3;
    } catch (const disj::PreconditionError& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
