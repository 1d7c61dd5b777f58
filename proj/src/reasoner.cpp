#include "difflog/reasoner.hpp"

namespace difflog {

Tensor<double> one_hot_weights(std::size_t n_clauses) {
    Tensor<double> W({n_clauses, n_clauses}, 0.0);
    for (std::size_t m = 0; m < n_clauses; ++m) W.at(m, m) = 100.0;
    return W;
}

CompiledProgram compile_program(const Language& lang, const std::vector<Clause>& clauses,
                                const std::vector<Atom>& targets, double gamma, std::size_t steps,
                                std::size_t budget) {
    if (gamma <= 0.0) throw ValidationError("gamma must be positive");
    if (clauses.empty()) throw ValidationError("program has no clauses");
    CompiledProgram prog;
    prog.lang = lang;
    prog.clauses = clauses;
    prog.table = enumerate_ground_atoms(lang);
    prog.index = build_index_tensor(clauses, prog.table, lang, budget);
    prog.weights = one_hot_weights(clauses.size());
    prog.options.gamma = gamma;
    prog.options.steps = steps > 0 ? steps : stratification_depth(clauses, lang);
    prog.targets = targets;
    for (const Atom& t : targets) {
        auto idx = prog.table.index(t);
        if (!idx) throw ValidationError("target atom '" + to_string(t, lang) + "' is not in the ground-atom table");
        prog.target_columns.push_back(*idx);
    }
    return prog;
}

Prediction predict(const Tensor<double>& V, const std::vector<std::uint32_t>& target_columns) {
    if (target_columns.empty()) throw ValidationError("predict needs at least one target atom");
    const std::size_t B = V.shape()[0], G = V.shape()[1];
    for (std::uint32_t col : target_columns)
        if (col >= G) throw ValidationError("target column out of range");

    Prediction pred;
    pred.probabilities = Tensor<double>({B, target_columns.size()});
    pred.labels.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < target_columns.size(); ++t)
            pred.probabilities.at(b, t) = V.at(b, static_cast<std::size_t>(target_columns[t]));
        if (target_columns.size() == 1) {
            pred.labels[b] = pred.probabilities.at(b, std::size_t{0}) >= 0.5 ? 1 : 0;
        } else {
            std::size_t best = 0;
            for (std::size_t t = 1; t < target_columns.size(); ++t)
                if (pred.probabilities.at(b, t) > pred.probabilities.at(b, best)) best = t;
            pred.labels[b] = static_cast<int>(best) + 1;
        }
    }
    return pred;
}

Prediction classify_pipeline(const ObjectTensor& Z, const CompiledProgram& prog, const BackgroundKnowledge& bk,
                             const AttributeEncoding& enc, const NeuralParams<double>& params) {
    Tensor<double> V0 = convert_facts(Z, prog.table, bk, prog.lang, enc, params);
    Tensor<double> VT = infer(std::move(V0), prog.index, prog.weights, prog.options);
    return predict(VT, prog.target_columns);
}

}  // namespace difflog
