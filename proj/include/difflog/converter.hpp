#ifndef DIFFLOG_CONVERTER_HPP
#define DIFFLOG_CONVERTER_HPP

#include <array>
#include <map>
#include <set>
#include <string>

#include "difflog/grounder.hpp"
#include "difflog/kernels.hpp"
#include "difflog/tensor.hpp"

// Conversion from object-centric scene tensors to probabilistic fact vectors:
// constant-to-tensor mapping, the valuation function of every neural
// predicate in both dataset layouts, concept fitting for the parameterized
// predicates, and the batched fact-vector builder.

namespace difflog {

enum class Layout { kandinsky11, clevr19 };

// kandinsky11: [x1,y1,x2,y2, red,yellow,blue, square,circle,triangle, objectness]
// clevr19:     [objectness, x,y,z, sphere,cube,cylinder, large,small,
//               rubber,metal, cyan,blue,yellow,purple,red,green,gray,brown]
std::size_t layout_dim(Layout layout);
std::size_t layout_objectness_column(Layout layout);

struct AttrSlot {
    std::size_t offset = 0;  // first column of the one-hot block
    std::size_t width = 0;
    std::size_t pos = 0;  // position of this attribute within the block
};

// Per-object attribute vectors, batch-major.
struct ObjectTensor {
    Layout layout = Layout::kandinsky11;
    Tensor<double> data;  // [B, E, D]

    std::size_t batch() const { return data.shape()[0]; }
    std::size_t slots() const { return data.shape()[1]; }
    std::size_t dim() const { return data.shape()[2]; }
    double at(std::size_t b, std::size_t slot, std::size_t col) const { return data.at(b, slot, col); }
};

// Maps each attribute constant to its one-hot slot in the layout.
class AttributeEncoding {
public:
    AttributeEncoding(const Language& lang, Layout layout);

    Layout layout() const { return layout_; }
    const AttrSlot& slot(std::uint32_t constant_id) const;
    bool has(std::uint32_t constant_id) const { return slots_.count(constant_id) > 0; }

private:
    Layout layout_;
    std::map<std::uint32_t, AttrSlot> slots_;
};

// The slot of an object constant is the integer suffix of its name
// (obj0 -> 0, obj1 -> 1, ...).
std::size_t object_slot(const std::string& constant_name);

// Tensor representation of an object or attribute constant: the Z slice for
// objects, the batch-expanded one-hot for attributes. Input constants have
// no tensor representation.
Tensor<double> to_tensor(std::uint32_t constant_id, const Language& lang, const ObjectTensor& Z,
                         const AttributeEncoding& enc);

// Per-predicate parameters of the trainable valuation functions, keyed by
// valuation id. closeby/online/leftside/rightside hold {w, b}; front holds
// six weights and a bias over the two concatenated positions.
template <typename S>
using NeuralParams = std::map<std::string, std::vector<S>>;

std::string format_params(const NeuralParams<double>& params);
NeuralParams<double> parse_params(const std::string& text);

struct BackgroundKnowledge {
    std::set<Atom> atoms;
};

// Root-mean-square orthogonal distance of the points to their total
// least-squares line: sqrt of the smaller eigenvalue of the centered 2x2
// covariance.
double linear_fit_residual(const std::vector<std::array<double, 2>>& points);

namespace detail {

inline std::array<double, 2> box_center(const std::vector<double>& row) {
    return {0.5 * (row[0] + row[2]), 0.5 * (row[1] + row[3])};
}

template <typename S>
const std::vector<S>& require_params(const NeuralParams<S>& params, const std::string& id, std::size_t n) {
    auto it = params.find(id);
    if (it == params.end()) throw ValidationError("missing parameters for valuation '" + id + "'");
    if (it->second.size() != n)
        throw ValidationError("valuation '" + id + "' expects " + std::to_string(n) + " parameters, got " +
                              std::to_string(it->second.size()));
    return it->second;
}

}  // namespace detail

// Probability of one ground atom of a neural predicate for every batch row.
// args carries the tensor representations of the non-input arguments in
// order (Z slices are [B,D], attribute one-hots [B,width]).
template <typename S>
std::vector<S> valuate(const std::string& valuation_id, const std::vector<const Tensor<double>*>& args,
                       Layout layout, const NeuralParams<S>& params) {
    const std::size_t B = args.empty() ? 0 : args[0]->shape()[0];
    std::vector<S> out(B);

    auto one_hot_product = [&](std::size_t offset, std::size_t width) {
        // sum over the block of Z-slice probabilities times the one-hot row
        const Tensor<double>& z = *args[0];
        const Tensor<double>& hot = *args[1];
        if (hot.shape()[1] != width) throw ValidationError("attribute width mismatch for '" + valuation_id + "'");
        for (std::size_t b = 0; b < B; ++b) {
            double acc = 0.0;
            for (std::size_t k = 0; k < width; ++k) acc += z.at(b, offset + k) * hot.at(b, k);
            out[b] = S{acc};
        }
    };

    if (valuation_id == "in") {
        const std::size_t col = layout_objectness_column(layout);
        for (std::size_t b = 0; b < B; ++b) out[b] = S{args[0]->at(b, col)};
    } else if (valuation_id == "shape") {
        one_hot_product(layout == Layout::kandinsky11 ? 7 : 4, 3);
    } else if (valuation_id == "color") {
        if (layout == Layout::kandinsky11) one_hot_product(4, 3);
        else one_hot_product(11, 8);
    } else if (valuation_id == "size") {
        one_hot_product(7, 2);
    } else if (valuation_id == "material") {
        one_hot_product(9, 2);
    } else if (valuation_id == "closeby") {
        const auto& p = detail::require_params(params, "closeby", 2);
        for (std::size_t b = 0; b < B; ++b) {
            double dx =
                0.5 * (args[0]->at(b, 0) + args[0]->at(b, 2)) - 0.5 * (args[1]->at(b, 0) + args[1]->at(b, 2));
            double dy =
                0.5 * (args[0]->at(b, 1) + args[0]->at(b, 3)) - 0.5 * (args[1]->at(b, 1) + args[1]->at(b, 3));
            double dist = std::sqrt(dx * dx + dy * dy);
            out[b] = sigmoid(p[0] * S{dist} + p[1]);
        }
    } else if (valuation_id == "online") {
        const auto& p = detail::require_params(params, "online", 2);
        std::vector<std::array<double, 2>> centers(args.size());
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t i = 0; i < args.size(); ++i) {
                const Tensor<double>& z = *args[i];
                centers[i] = {0.5 * (z.at(b, 0) + z.at(b, 2)), 0.5 * (z.at(b, 1) + z.at(b, 3))};
            }
            out[b] = sigmoid(p[0] * S{linear_fit_residual(centers)} + p[1]);
        }
    } else if (valuation_id == "leftside" || valuation_id == "rightside") {
        const auto& p = detail::require_params(params, valuation_id, 2);
        for (std::size_t b = 0; b < B; ++b)
            out[b] = sigmoid(p[0] * S{args[0]->at(b, 1)} + p[1]) * S{args[0]->at(b, 0)};
    } else if (valuation_id == "front") {
        const auto& p = detail::require_params(params, "front", 7);
        for (std::size_t b = 0; b < B; ++b) {
            S acc = p[6];
            for (std::size_t k = 0; k < 3; ++k) acc += p[k] * S{args[0]->at(b, 1 + k)};
            for (std::size_t k = 0; k < 3; ++k) acc += p[3 + k] * S{args[1]->at(b, 1 + k)};
            out[b] = sigmoid(acc) * S{args[0]->at(b, 0)} * S{args[1]->at(b, 0)};
        }
    } else {
        throw ValidationError("unknown valuation id '" + valuation_id + "'");
    }
    return out;
}

template <typename S>
std::vector<S> valuate(const std::string& valuation_id, const std::vector<Tensor<double>>& args, Layout layout,
                       const NeuralParams<S>& params) {
    std::vector<const Tensor<double>*> ptrs;
    ptrs.reserve(args.size());
    for (const Tensor<double>& a : args) ptrs.push_back(&a);
    return valuate(valuation_id, ptrs, layout, params);
}

// Builds the initial valuation tensor: zeros everywhere, true column 1,
// neural-predicate columns from their valuation functions, background-
// knowledge columns 1. Constant tensors are materialized once per call, not
// once per atom.
template <typename S>
Tensor<S> convert_facts(const ObjectTensor& Z, const GroundAtomTable& table, const BackgroundKnowledge& bk,
                        const Language& lang, const AttributeEncoding& enc, const NeuralParams<S>& params) {
    const std::size_t B = Z.batch();
    const std::size_t G = table.size();
    Tensor<S> V({B, G}, S{0.0});
    for (std::size_t b = 0; b < B; ++b) V.at(b, std::size_t{1}) = S{1.0};

    std::vector<std::optional<Tensor<double>>> cache(lang.constants.size());
    auto cached = [&](std::uint32_t cid) -> const Tensor<double>* {
        if (!cache[cid]) cache[cid] = to_tensor(cid, lang, Z, enc);
        return &*cache[cid];
    };

    std::vector<const Tensor<double>*> args;
    for (std::size_t j = 2; j < table.atoms.size(); ++j) {
        const Atom& atom = table.atoms[j];
        const Predicate& pred = lang.predicates[atom.pred];
        if (pred.is_neural) {
            args.clear();
            for (const Term& t : atom.terms) {
                if (lang.constants[t.id].kind == ConstantKind::input) continue;
                args.push_back(cached(t.id));
            }
            std::vector<S> col = valuate(pred.valuation_id, args, Z.layout, params);
            for (std::size_t b = 0; b < B; ++b) V.at(b, j) = col[b];
        } else if (bk.atoms.count(atom)) {
            for (std::size_t b = 0; b < B; ++b) V.at(b, j) = S{1.0};
        }
    }
    return V;
}

// One labeled concept example: the object rows it concerns plus a binary
// label (closeby/front: two rows; online: five; leftside/rightside: one).
struct ConceptExample {
    std::vector<std::vector<double>> rows;
    int label = 0;
};

// Fits the parameters of one trainable valuation by full-batch gradient
// descent on mean binary cross-entropy. Requires both labels present.
std::vector<double> fit_concept(const std::string& valuation_id, const std::vector<ConceptExample>& examples,
                                double lr = 0.1, std::size_t iterations = 2000, std::uint64_t seed = 0);

// Fraction of examples whose valuation, thresholded at 0.5, matches the label.
double concept_accuracy(const std::string& valuation_id, const std::vector<double>& params,
                        const std::vector<ConceptExample>& examples);

}  // namespace difflog

#endif
