#include "difflog/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "difflog/rng.hpp"

namespace difflog {

namespace {

// One randomized check instance: a small program with neural predicates in
// the body, random soft object tensors, random weights and parameters. Three
// templates rotate so every trainable valuation gets exercised.
struct Instance {
    Language lang;
    std::vector<Clause> clauses;
    ObjectTensor Z;
    NeuralParams<double> params;
    Tensor<double> weights;
    CompiledProgram prog;
};

void random_simplex_slice(std::vector<double>& row, std::size_t offset, std::size_t width, Rng& rng) {
    double total = 0.0;
    std::vector<double> raw(width);
    for (double& v : raw) {
        v = -std::log(1.0 - rng.uniform());
        total += v;
    }
    double scale = rng.uniform(0.6, 1.0);
    for (std::size_t k = 0; k < width; ++k) row[offset + k] = scale * raw[k] / total;
}

ObjectTensor random_object_tensor(Layout layout, std::size_t batch, std::size_t slots, Rng& rng) {
    ObjectTensor Z;
    Z.layout = layout;
    Z.data = Tensor<double>({batch, slots, layout_dim(layout)}, 0.0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t s = 0; s < slots; ++s) {
            std::vector<double> row(layout_dim(layout), 0.0);
            if (layout == Layout::kandinsky11) {
                row[0] = rng.uniform(0.0, 0.8);
                row[1] = rng.uniform(0.0, 0.8);
                row[2] = row[0] + rng.uniform(0.05, 0.2);
                row[3] = row[1] + rng.uniform(0.05, 0.2);
                random_simplex_slice(row, 4, 3, rng);
                random_simplex_slice(row, 7, 3, rng);
                row[10] = rng.uniform(0.6, 0.95);
            } else {
                row[0] = rng.uniform(0.6, 0.95);
                row[1] = rng.uniform(0.0, 1.0);
                row[2] = rng.uniform(0.0, 1.0);
                row[3] = rng.uniform(0.0, 1.0);
                random_simplex_slice(row, 4, 3, rng);
                random_simplex_slice(row, 7, 2, rng);
                random_simplex_slice(row, 9, 2, rng);
                random_simplex_slice(row, 11, 8, rng);
            }
            for (std::size_t d = 0; d < row.size(); ++d) Z.data.at(b, s, d) = row[d];
        }
    return Z;
}

Tensor<double> random_weights(std::size_t m, std::size_t c, Rng& rng) {
    Tensor<double> W({m, c});
    for (double& v : W.data()) v = rng.uniform(-1.0, 1.0);
    return W;
}

Instance make_instance(std::size_t which, Rng& rng) {
    Instance inst;
    const std::size_t batch = 2;
    if (which % 3 == 0) {
        inst.lang = parse_language(
            "datatype image\ndatatype object\ndatatype color\ndatatype shape\n"
            "constant img : image input\n"
            "constant obj1 : object object\nconstant obj2 : object object\n"
            "constant red : color attribute\nconstant yellow : color attribute\nconstant blue : color attribute\n"
            "constant square : shape attribute\nconstant circle : shape attribute\n"
            "constant triangle : shape attribute\n"
            "pred kp/1[image]\npred pair/2[object,object]\n"
            "neural_pred in/2[object,image] = in\n"
            "neural_pred color/2[object,color] = color\n"
            "neural_pred shape/2[object,shape] = shape\n"
            "neural_pred closeby/2[object,object] = closeby\n");
        inst.clauses = parse_rules(
            "kp(X):-in(O1,X),in(O2,X),pair(O1,O2).\n"
            "pair(X,Y):-closeby(X,Y),color(X,Z),color(Y,Z).\n"
            "kp(X):-in(O1,X),shape(O1,square).\n",
            inst.lang);
        inst.Z = random_object_tensor(Layout::kandinsky11, batch, 3, rng);
        inst.params["closeby"] = {rng.uniform(-3.0, 3.0), rng.uniform(-1.0, 1.0)};
        inst.weights = random_weights(2, inst.clauses.size(), rng);
    } else if (which % 3 == 1) {
        inst.lang = parse_language(
            "datatype image\ndatatype object\ndatatype size\n"
            "constant img : image input\n"
            "constant obj0 : object object\nconstant obj1 : object object\nconstant obj2 : object object\n"
            "constant large : size attribute\nconstant small : size attribute\n"
            "pred kp/1[image]\n"
            "neural_pred in/2[object,image] = in\n"
            "neural_pred size/2[object,size] = size\n"
            "neural_pred leftside/1[object] = leftside\n"
            "neural_pred rightside/1[object] = rightside\n"
            "neural_pred front/2[object,object] = front\n");
        inst.clauses = parse_rules(
            "kp(X):-in(O1,X),in(O2,X),front(O1,O2),leftside(O1).\n"
            "kp(X):-in(O1,X),rightside(O1),size(O1,large).\n",
            inst.lang);
        inst.Z = random_object_tensor(Layout::clevr19, batch, 3, rng);
        inst.params["leftside"] = {rng.uniform(-3.0, 3.0), rng.uniform(-1.0, 1.0)};
        inst.params["rightside"] = {rng.uniform(-3.0, 3.0), rng.uniform(-1.0, 1.0)};
        inst.params["front"] = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                rng.uniform(-1.0, 1.0)};
        inst.weights = random_weights(2, inst.clauses.size(), rng);
    } else {
        inst.lang = parse_language(
            "datatype image\ndatatype object\n"
            "constant img : image input\n"
            "constant obj1 : object object\nconstant obj2 : object object\nconstant obj3 : object object\n"
            "constant obj4 : object object\nconstant obj5 : object object\n"
            "pred kp/1[image]\n"
            "neural_pred in/2[object,image] = in\n"
            "neural_pred online/5[object,object,object,object,object] = online\n"
            "neural_pred closeby/2[object,object] = closeby\n");
        inst.clauses = parse_rules(
            "kp(X):-in(O1,X),in(O2,X),in(O3,X),in(O4,X),in(O5,X),online(O1,O2,O3,O4,O5).\n"
            "kp(X):-in(O1,X),in(O2,X),closeby(O1,O2).\n",
            inst.lang);
        inst.Z = random_object_tensor(Layout::kandinsky11, batch, 6, rng);
        inst.params["online"] = {rng.uniform(-5.0, 5.0), rng.uniform(-1.0, 1.0)};
        inst.params["closeby"] = {rng.uniform(-3.0, 3.0), rng.uniform(-1.0, 1.0)};
        inst.weights = random_weights(2, inst.clauses.size(), rng);
    }

    Atom target{*inst.lang.predicate_id("kp"), {Term::con(*inst.lang.constant_id("img"))}};
    inst.prog = compile_program(inst.lang, inst.clauses, {target});
    inst.prog.weights = inst.weights;
    return inst;
}

// Sum of all target probabilities: the scalar whose gradient is checked.
template <typename S>
S objective(const Instance& inst, const NeuralParams<S>& params, const Tensor<S>& W) {
    AttributeEncoding enc(inst.lang, inst.Z.layout);
    BackgroundKnowledge bk;
    Tensor<S> V = convert_facts(inst.Z, inst.prog.table, bk, inst.prog.lang, enc, params);
    V = infer(std::move(V), inst.prog.index, W, inst.prog.options);
    S total{0.0};
    const std::size_t G = inst.prog.table.size();
    for (std::size_t b = 0; b < inst.Z.batch(); ++b)
        for (std::uint32_t col : inst.prog.target_columns) total += V[b * G + col];
    return total;
}

template <typename S>
NeuralParams<S> cast_params(const NeuralParams<double>& params) {
    NeuralParams<S> out;
    for (const auto& [k, v] : params) out[k] = std::vector<S>(v.begin(), v.end());
    return out;
}

}  // namespace

GradCheckResult gradcheck_run(std::size_t instances, std::uint64_t seed, double tolerance, double fd_step) {
    Rng rng(seed);
    GradCheckResult result;
    result.instances = instances;

    for (std::size_t n = 0; n < instances; ++n) {
        Instance inst = make_instance(n, rng);

        auto check = [&](double dual_deriv, double fd_deriv, const std::string& where) {
            double denom = std::max({std::fabs(dual_deriv), std::fabs(fd_deriv), 1e-6});
            double rel = std::fabs(dual_deriv - fd_deriv) / denom;
            ++result.coordinates;
            if (rel > result.max_rel_err) {
                result.max_rel_err = rel;
                result.worst = where;
            }
        };

        // clause weights
        for (std::size_t i = 0; i < inst.weights.numel(); ++i) {
            Tensor<Dual> W_dual({inst.weights.shape()[0], inst.weights.shape()[1]});
            for (std::size_t k = 0; k < inst.weights.numel(); ++k)
                W_dual[k] = Dual(inst.weights[k], k == i ? 1.0 : 0.0);
            NeuralParams<Dual> params_dual = cast_params<Dual>(inst.params);
            double dual_deriv = objective(inst, params_dual, W_dual).tan;

            Tensor<double> W_hi = inst.weights, W_lo = inst.weights;
            W_hi[i] += fd_step;
            W_lo[i] -= fd_step;
            NeuralParams<double> p = inst.params;
            double fd = (objective(inst, p, W_hi) - objective(inst, p, W_lo)) / (2.0 * fd_step);

            std::ostringstream where;
            where << "instance " << n << " W[" << i << "]";
            check(dual_deriv, fd, where.str());
        }

        // neural-predicate parameters
        for (const auto& [name, values] : inst.params) {
            for (std::size_t i = 0; i < values.size(); ++i) {
                NeuralParams<Dual> params_dual = cast_params<Dual>(inst.params);
                params_dual[name][i].tan = 1.0;
                Tensor<Dual> W_dual({inst.weights.shape()[0], inst.weights.shape()[1]});
                for (std::size_t k = 0; k < inst.weights.numel(); ++k) W_dual[k] = Dual(inst.weights[k], 0.0);
                double dual_deriv = objective(inst, params_dual, W_dual).tan;

                NeuralParams<double> hi = inst.params, lo = inst.params;
                hi[name][i] += fd_step;
                lo[name][i] -= fd_step;
                double fd =
                    (objective(inst, hi, inst.weights) - objective(inst, lo, inst.weights)) / (2.0 * fd_step);

                std::ostringstream where;
                where << "instance " << n << " " << name << "[" << i << "]";
                check(dual_deriv, fd, where.str());
            }
        }
    }
    result.pass = result.max_rel_err <= tolerance;
    return result;
}

}  // namespace difflog
