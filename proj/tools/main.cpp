#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "difflog/bench.hpp"
#include "difflog/datagen.hpp"
#include "difflog/gradcheck.hpp"
#include "difflog/report.hpp"

namespace {

using namespace difflog;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << content;
}

struct ProgramOptions {
    std::string lang_path, rules_path, bk_path, params_path, scenes_path, out_path;
    std::string targets = "kp(img)";
    std::string or_op = "softor";
    std::string dump_path;
    double gamma = 0.01;
    std::size_t steps = 0;
    std::size_t batch = 0;
    std::size_t budget = kDefaultElementBudget;
    double noise = 0.0;
    std::uint64_t noise_seed = 0;
    bool row_norm = false;
};

void add_program_options(CLI::App* cmd, ProgramOptions& opt, bool needs_params) {
    cmd->add_option("--lang", opt.lang_path, "language file")->required();
    cmd->add_option("--rules", opt.rules_path, "rules file")->required();
    cmd->add_option("--bk", opt.bk_path, "background-knowledge file");
    if (needs_params) cmd->add_option("--params", opt.params_path, "neural-predicate parameter file");
    cmd->add_option("--scenes", opt.scenes_path, "scene jsonl file")->required();
    cmd->add_option("--targets", opt.targets, "comma-separated target atoms (default kp(img))");
    cmd->add_option("--gamma", opt.gamma, "softor smoothing (default 0.01)");
    cmd->add_option("--steps", opt.steps, "inference steps (default: stratification depth)");
    cmd->add_option("--batch", opt.batch, "scenes per inference batch (default: all)");
    cmd->add_option("--budget", opt.budget, "index-tensor element budget");
    cmd->add_option("--or", opt.or_op, "soft disjunction: softor (default) or prob_sum");
    cmd->add_flag("--row-norm", opt.row_norm, "normalize softor per batch row instead of globally");
    cmd->add_option("--dump-valuations", opt.dump_path, "also write the final valuation matrix as csv");
    cmd->add_option("--out", opt.out_path, "output csv path")->required();
}

void apply_infer_options(CompiledProgram& prog, const ProgramOptions& opt) {
    if (opt.or_op == "prob_sum") prog.options.or_op = OrOp::prob_sum;
    else if (opt.or_op != "softor") throw ValidationError("--or must be softor or prob_sum");
    if (opt.row_norm) prog.options.norm_scope = NormScope::per_row;
}

struct LoadedProgram {
    Language lang;
    std::vector<Clause> rules;
    BackgroundKnowledge bk;
    NeuralParams<double> params;
    std::vector<Scene> scenes;
    std::vector<Atom> targets;
    std::vector<std::string> target_names;
    std::size_t max_objects = 0;
};

LoadedProgram load_program(const ProgramOptions& opt) {
    LoadedProgram p;
    p.lang = parse_language(read_file(opt.lang_path));
    p.rules = parse_rules(read_file(opt.rules_path), p.lang);
    if (!opt.bk_path.empty()) p.bk = parse_bk(read_file(opt.bk_path), p.lang);
    if (!opt.params_path.empty()) p.params = parse_params(read_file(opt.params_path));
    p.scenes = read_scenes_jsonl(read_file(opt.scenes_path));
    if (p.scenes.empty()) throw ValidationError("no scenes in '" + opt.scenes_path + "'");

    std::stringstream ts(opt.targets);
    std::string t;
    while (std::getline(ts, t, ',')) {
        std::vector<Atom> atoms = parse_ground_atoms(t, p.lang);
        if (atoms.size() != 1) throw ValidationError("bad target '" + t + "'");
        p.targets.push_back(atoms[0]);
        p.target_names.push_back(t);
    }
    if (p.targets.empty()) throw ValidationError("no target atoms given");

    // Z must cover every declared object constant, not just scene objects.
    std::size_t max_slot = 0;
    for (const Constant& c : p.lang.constants)
        if (c.kind == ConstantKind::object) max_slot = std::max(max_slot, object_slot(c.name));
    p.max_objects = p.scenes[0].dataset == Dataset::kandinsky ? max_slot : max_slot + 1;
    return p;
}

int run_classify(const ProgramOptions& opt, bool with_labels) {
    LoadedProgram p = load_program(opt);
    CompiledProgram prog = compile_program(p.lang, p.rules, p.targets, opt.gamma, opt.steps, opt.budget);
    apply_infer_options(prog, opt);
    Layout layout = p.scenes[0].dataset == Dataset::kandinsky ? Layout::kandinsky11 : Layout::clevr19;
    AttributeEncoding enc(p.lang, layout);

    std::ostringstream dump;
    if (!opt.dump_path.empty()) {
        dump << "scene_id";
        for (std::size_t j = 0; j < prog.table.size(); ++j) {
            const Atom& a = prog.table.atoms[j];
            if (a.pred == kFalsePred) dump << ",false";
            else if (a.pred == kTruePred) dump << ",true";
            else dump << "," << to_string(a, p.lang);
        }
        dump << "\n";
    }

    std::size_t chunk = opt.batch == 0 ? p.scenes.size() : opt.batch;
    Prediction all;
    all.probabilities = Tensor<double>({p.scenes.size(), p.targets.size()});
    for (std::size_t begin = 0; begin < p.scenes.size(); begin += chunk) {
        std::size_t end = std::min(begin + chunk, p.scenes.size());
        std::vector<Scene> part(p.scenes.begin() + static_cast<std::ptrdiff_t>(begin),
                                p.scenes.begin() + static_cast<std::ptrdiff_t>(end));
        ObjectTensor Z = scene_to_tensor(part, p.max_objects);
        if (opt.noise > 0.0) Z = add_noise(Z, opt.noise, opt.noise_seed + begin);
        Tensor<double> V = convert_facts(Z, prog.table, p.bk, prog.lang, enc, p.params);
        V = infer(std::move(V), prog.index, prog.weights, prog.options);
        Prediction pred = predict(V, prog.target_columns);
        for (std::size_t b = 0; b < part.size(); ++b) {
            for (std::size_t t = 0; t < p.targets.size(); ++t)
                all.probabilities.at(begin + b, t) = pred.probabilities.at(b, t);
            all.labels.push_back(pred.labels[b]);
            if (!opt.dump_path.empty()) {
                dump << begin + b;
                for (std::size_t j = 0; j < prog.table.size(); ++j) dump << "," << format_g17(V.at(b, j));
                dump << "\n";
            }
        }
    }
    if (!opt.dump_path.empty()) write_file(opt.dump_path, dump.str());
    write_file(opt.out_path, prediction_csv(all, p.target_names, with_labels));
    if (with_labels) {
        std::vector<int> truth;
        for (const Scene& s : p.scenes) truth.push_back(s.label);
        std::printf("accuracy=%.3f\n", accuracy(all.labels, truth));
    }
    return 0;
}

int run_oracle(const ProgramOptions& opt) {
    LoadedProgram p = load_program(opt);
    Prediction all;
    all.probabilities = Tensor<double>({p.scenes.size(), p.targets.size()});
    for (std::size_t i = 0; i < p.scenes.size(); ++i) {
        FactSet facts = scene_facts(p.scenes[i], p.lang);
        for (const Atom& a : p.bk.atoms) facts.insert(a);
        FactSet closure = forward_chain(p.rules, facts, p.lang);
        for (std::size_t t = 0; t < p.targets.size(); ++t)
            all.probabilities.at(i, t) = closure.contains(p.targets[t]) ? 1.0 : 0.0;
        if (p.targets.size() == 1) {
            all.labels.push_back(all.probabilities.at(i, std::size_t{0}) >= 0.5 ? 1 : 0);
        } else {
            std::size_t best = 0;
            for (std::size_t t = 1; t < p.targets.size(); ++t)
                if (all.probabilities.at(i, t) > all.probabilities.at(i, best)) best = t;
            all.labels.push_back(static_cast<int>(best) + 1);
        }
    }
    write_file(opt.out_path, prediction_csv(all, p.target_names, true));
    std::vector<int> truth;
    for (const Scene& s : p.scenes) truth.push_back(s.label);
    std::printf("accuracy=%.3f\n", accuracy(all.labels, truth));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"batched differentiable forward-chaining reasoner"};
    app.require_subcommand(1);

    // gen
    std::string gen_pattern, gen_out, gen_emit;
    std::size_t gen_pos = 200, gen_neg = 200, gen_per_class = 150;
    std::uint64_t gen_seed = 7;
    auto* gen = app.add_subcommand("gen", "generate labeled synthetic scenes");
    gen->add_option("--pattern", gen_pattern, "twopairs|threepairs|closeby|redtriangle|onlinepair|ninecircles|clevr3|clevr7")
        ->required();
    gen->add_option("--pos", gen_pos, "positive scenes (kandinsky)");
    gen->add_option("--neg", gen_neg, "negative scenes (kandinsky)");
    gen->add_option("--per-class", gen_per_class, "scenes per class (clevr)");
    gen->add_option("--seed", gen_seed, "rng seed");
    gen->add_option("--out", gen_out, "output scenes.jsonl")->required();
    gen->add_option("--emit-program", gen_emit, "also write <pattern>.lang/.rules/.bk into this directory");

    // train-concept
    std::string tc_concept, tc_out;
    std::size_t tc_n = 1000, tc_iters = 2000;
    std::uint64_t tc_seed = 3;
    double tc_lr = 0.1;
    auto* tc = app.add_subcommand("train-concept", "fit a trainable neural predicate");
    tc->add_option("--concept", tc_concept, "closeby|online|leftside|rightside|front")->required();
    tc->add_option("--n", tc_n, "examples per class");
    tc->add_option("--seed", tc_seed, "rng seed");
    tc->add_option("--iterations", tc_iters, "gradient-descent iterations");
    tc->add_option("--lr", tc_lr, "learning rate");
    tc->add_option("--out", tc_out, "parameter file (updated in place)")->required();

    // compile
    std::string co_lang, co_rules, co_out;
    std::size_t co_budget = difflog::kDefaultElementBudget;
    auto* co = app.add_subcommand("compile", "ground a program and write the index tensor");
    co->add_option("--lang", co_lang, "language file")->required();
    co->add_option("--rules", co_rules, "rules file")->required();
    co->add_option("--budget", co_budget, "element budget");
    co->add_option("--out", co_out, "output .nsix path")->required();

    // infer / classify / oracle
    ProgramOptions infer_opt, classify_opt, oracle_opt;
    auto* inf = app.add_subcommand("infer", "soft inference, per-target probabilities");
    add_program_options(inf, infer_opt, true);
    auto* cls = app.add_subcommand("classify", "soft inference with predicted labels and accuracy");
    add_program_options(cls, classify_opt, true);
    cls->add_option("--noise", classify_opt.noise, "attribute noise level in [0,1)");
    cls->add_option("--noise-seed", classify_opt.noise_seed, "noise rng seed");
    auto* orc = app.add_subcommand("oracle", "exact forward chaining, 0/1 entailment per target");
    add_program_options(orc, oracle_opt, false);

    // gradcheck
    std::size_t gc_instances = 50;
    std::uint64_t gc_seed = 1;
    double gc_tol = 1e-4;
    auto* gc = app.add_subcommand("gradcheck", "dual-number vs finite-difference derivative check");
    gc->add_option("--instances", gc_instances, "random instances");
    gc->add_option("--seed", gc_seed, "rng seed");
    gc->add_option("--tolerance", gc_tol, "max relative error");

    // bench
    ProgramOptions bench_opt;
    std::size_t bench_reps = 5, bench_max = 50;
    auto* ben = app.add_subcommand("bench", "inference time vs batch size");
    add_program_options(ben, bench_opt, true);
    ben->add_option("--reps", bench_reps, "repetitions per batch size");
    ben->add_option("--max-batch", bench_max, "largest batch size");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const PatternSpec& spec = pattern_spec(gen_pattern);
            std::vector<Scene> scenes;
            if (spec.dataset == Dataset::kandinsky) {
                scenes = gen_kandinsky(gen_pattern, gen_pos, gen_neg, gen_seed);
            } else {
                scenes = gen_clevr_hans(gen_pattern == "clevr3" ? 3 : 7, gen_per_class, gen_seed);
            }
            write_file(gen_out, write_scenes_jsonl(scenes));
            if (!gen_emit.empty()) {
                std::filesystem::create_directories(gen_emit);
                std::filesystem::path dir(gen_emit);
                write_file((dir / (gen_pattern + ".lang")).string(), spec.language_text);
                write_file((dir / (gen_pattern + ".rules")).string(), spec.rules_text);
                write_file((dir / (gen_pattern + ".bk")).string(), spec.bk_text);
            }
            std::printf("wrote %zu scenes to %s\n", scenes.size(), gen_out.c_str());
        } else if (tc->parsed()) {
            std::vector<ConceptExample> train = gen_concept_set(tc_concept, tc_n, tc_seed);
            std::vector<double> fitted = fit_concept(tc_concept, train, tc_lr, tc_iters, tc_seed);
            std::vector<ConceptExample> heldout = gen_concept_set(tc_concept, tc_n, tc_seed + 1);
            double acc = concept_accuracy(tc_concept, fitted, heldout);

            NeuralParams<double> params;
            if (std::filesystem::exists(tc_out)) params = parse_params(read_file(tc_out));
            params[tc_concept] = fitted;
            write_file(tc_out, format_params(params));
            std::printf("%s heldout_accuracy=%.4f\n", tc_concept.c_str(), acc);
        } else if (co->parsed()) {
            Language lang = parse_language(read_file(co_lang));
            std::vector<Clause> rules = parse_rules(read_file(co_rules), lang);
            GroundAtomTable table = enumerate_ground_atoms(lang);
            IndexTensor tensor = build_index_tensor(rules, table, lang, co_budget);
            std::ofstream out(co_out, std::ios::binary);
            if (!out) throw ValidationError("cannot write '" + co_out + "'");
            write_index_tensor(out, tensor);
            std::ofstream side(co_out + ".atoms.txt");
            write_atom_listing(side, table, lang);
            std::printf("C=%zu G=%zu S=%zu L=%zu -> %s\n", tensor.C, tensor.G, tensor.S, tensor.L, co_out.c_str());
        } else if (inf->parsed()) {
            return run_classify(infer_opt, false);
        } else if (cls->parsed()) {
            return run_classify(classify_opt, true);
        } else if (orc->parsed()) {
            return run_oracle(oracle_opt);
        } else if (gc->parsed()) {
            GradCheckResult r = gradcheck_run(gc_instances, gc_seed, gc_tol);
            std::printf("instances=%zu coordinates=%zu max_rel_err=%.3e %s\n", r.instances, r.coordinates,
                        r.max_rel_err, r.pass ? "pass" : ("FAIL at " + r.worst).c_str());
            if (!r.pass) return 1;
        } else if (ben->parsed()) {
            LoadedProgram p = load_program(bench_opt);
            CompiledProgram prog =
                compile_program(p.lang, p.rules, p.targets, bench_opt.gamma, bench_opt.steps, bench_opt.budget);
            Layout layout = p.scenes[0].dataset == Dataset::kandinsky ? Layout::kandinsky11 : Layout::clevr19;
            AttributeEncoding enc(p.lang, layout);
            ObjectTensor Z = scene_to_tensor(p.scenes, p.max_objects);
            std::vector<BenchRow> rows = bench_batches(prog, p.bk, enc, p.params, Z, bench_reps, bench_max);
            write_file(bench_opt.out_path, bench_csv(rows));
            std::printf("wrote %zu rows to %s\n", rows.size(), bench_opt.out_path.c_str());
        }
    } catch (const difflog::BudgetError& e) {
        std::fprintf(stderr, "budget error: %s\n", e.what());
        return 2;
    } catch (const difflog::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
