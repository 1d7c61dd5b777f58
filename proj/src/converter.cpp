#include "difflog/converter.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace difflog {

namespace {

struct LayoutAttr {
    const char* name;
    std::size_t offset;
    std::size_t width;
    std::size_t pos;
};

const LayoutAttr kKandinskyAttrs[] = {
    {"red", 4, 3, 0},    {"yellow", 4, 3, 1},   {"blue", 4, 3, 2},
    {"square", 7, 3, 0}, {"circle", 7, 3, 1},   {"triangle", 7, 3, 2},
};

const LayoutAttr kClevrAttrs[] = {
    {"sphere", 4, 3, 0}, {"cube", 4, 3, 1},   {"cylinder", 4, 3, 2},
    {"large", 7, 2, 0},  {"small", 7, 2, 1},
    {"rubber", 9, 2, 0}, {"metal", 9, 2, 1},
    {"cyan", 11, 8, 0},  {"blue", 11, 8, 1},  {"yellow", 11, 8, 2}, {"purple", 11, 8, 3},
    {"red", 11, 8, 4},   {"green", 11, 8, 5}, {"gray", 11, 8, 6},   {"brown", 11, 8, 7},
};

const LayoutAttr* find_attr(Layout layout, const std::string& name) {
    if (layout == Layout::kandinsky11) {
        for (const LayoutAttr& a : kKandinskyAttrs)
            if (name == a.name) return &a;
    } else {
        for (const LayoutAttr& a : kClevrAttrs)
            if (name == a.name) return &a;
    }
    return nullptr;
}

}  // namespace

std::size_t layout_dim(Layout layout) { return layout == Layout::kandinsky11 ? 11 : 19; }

std::size_t layout_objectness_column(Layout layout) { return layout == Layout::kandinsky11 ? 10 : 0; }

AttributeEncoding::AttributeEncoding(const Language& lang, Layout layout) : layout_(layout) {
    for (std::uint32_t c = 0; c < lang.constants.size(); ++c) {
        if (lang.constants[c].kind != ConstantKind::attribute) continue;
        const LayoutAttr* attr = find_attr(layout, lang.constants[c].name);
        if (!attr)
            throw ValidationError("attribute constant '" + lang.constants[c].name +
                                  "' has no slot in the selected layout");
        slots_.emplace(c, AttrSlot{attr->offset, attr->width, attr->pos});
    }
}

const AttrSlot& AttributeEncoding::slot(std::uint32_t constant_id) const {
    auto it = slots_.find(constant_id);
    if (it == slots_.end()) throw ValidationError("constant has no attribute encoding");
    return it->second;
}

std::size_t object_slot(const std::string& constant_name) {
    std::size_t i = constant_name.size();
    while (i > 0 && std::isdigit(static_cast<unsigned char>(constant_name[i - 1]))) --i;
    if (i == constant_name.size())
        throw ValidationError("object constant '" + constant_name + "' has no numeric slot suffix");
    return static_cast<std::size_t>(std::stoul(constant_name.substr(i)));
}

Tensor<double> to_tensor(std::uint32_t constant_id, const Language& lang, const ObjectTensor& Z,
                         const AttributeEncoding& enc) {
    const Constant& c = lang.constants[constant_id];
    const std::size_t B = Z.batch();
    if (c.kind == ConstantKind::object) {
        std::size_t slot = object_slot(c.name);
        if (slot >= Z.slots())
            throw ValidationError("object constant '" + c.name + "' exceeds the " + std::to_string(Z.slots()) +
                                  " object slots");
        Tensor<double> out({B, Z.dim()});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t d = 0; d < Z.dim(); ++d) out.at(b, d) = Z.at(b, slot, d);
        return out;
    }
    if (c.kind == ConstantKind::attribute) {
        const AttrSlot& slot = enc.slot(constant_id);
        Tensor<double> out({B, slot.width}, 0.0);
        for (std::size_t b = 0; b < B; ++b) out.at(b, slot.pos) = 1.0;
        return out;
    }
    throw ValidationError("input constant '" + c.name + "' has no tensor representation");
}

std::string format_params(const NeuralParams<double>& params) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& [name, values] : params) {
        out << name;
        for (double v : values) out << " " << v;
        out << "\n";
    }
    return out.str();
}

NeuralParams<double> parse_params(const std::string& text) {
    NeuralParams<double> params;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto pos = line.find('%');
        if (pos != std::string::npos) line.erase(pos);
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name)) continue;
        std::vector<double> values;
        double v;
        while (ls >> v) values.push_back(v);
        if (values.empty()) throw ValidationError(line_no, 1, "parameter line without values");
        params[name] = std::move(values);
    }
    return params;
}

double linear_fit_residual(const std::vector<std::array<double, 2>>& points) {
    const std::size_t n = points.size();
    if (n < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p[0];
        my += p[1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        double dx = p[0] - mx, dy = p[1] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    sxx /= static_cast<double>(n);
    syy /= static_cast<double>(n);
    sxy /= static_cast<double>(n);
    double half_trace = 0.5 * (sxx + syy);
    double det = sxx * syy - sxy * sxy;
    double disc = std::sqrt(std::max(0.0, half_trace * half_trace - det));
    double lambda_min = std::max(0.0, half_trace - disc);
    return std::sqrt(lambda_min);
}

namespace {

// The feature vector each trainable valuation is linear in.
std::vector<double> concept_features(const std::string& valuation_id, const ConceptExample& ex) {
    if (valuation_id == "closeby") {
        auto c1 = detail::box_center(ex.rows[0]);
        auto c2 = detail::box_center(ex.rows[1]);
        double dx = c1[0] - c2[0], dy = c1[1] - c2[1];
        return {std::sqrt(dx * dx + dy * dy)};
    }
    if (valuation_id == "online") {
        std::vector<std::array<double, 2>> centers;
        for (const auto& row : ex.rows) centers.push_back(detail::box_center(row));
        return {linear_fit_residual(centers)};
    }
    if (valuation_id == "leftside" || valuation_id == "rightside") return {ex.rows[0][1]};
    if (valuation_id == "front")
        return {ex.rows[0][1], ex.rows[0][2], ex.rows[0][3], ex.rows[1][1], ex.rows[1][2], ex.rows[1][3]};
    throw ValidationError("valuation '" + valuation_id + "' is not trainable");
}

}  // namespace

std::vector<double> fit_concept(const std::string& valuation_id, const std::vector<ConceptExample>& examples,
                                double lr, std::size_t iterations, std::uint64_t seed) {
    (void)seed;  // full-batch descent from zero is already deterministic
    bool has_pos = false, has_neg = false;
    for (const ConceptExample& ex : examples) (ex.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw ValidationError("concept fitting needs both positive and negative examples");

    std::vector<std::vector<double>> feats;
    feats.reserve(examples.size());
    for (const ConceptExample& ex : examples) feats.push_back(concept_features(valuation_id, ex));
    const std::size_t k = feats[0].size();

    // Descends the summed cross-entropy gradient (same minimizer as the
    // mean); the unscaled steps saturate the sigmoids within the iteration
    // budget, giving near-crisp concept probabilities.
    std::vector<double> theta(k + 1, 0.0);  // weights then bias
    std::vector<double> grad(k + 1);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t e = 0; e < examples.size(); ++e) {
            double z = theta[k];
            for (std::size_t i = 0; i < k; ++i) z += theta[i] * feats[e][i];
            double err = sigmoid(z) - static_cast<double>(examples[e].label);
            for (std::size_t i = 0; i < k; ++i) grad[i] += err * feats[e][i];
            grad[k] += err;
        }
        for (std::size_t i = 0; i <= k; ++i) theta[i] -= lr * grad[i];
    }
    return theta;
}

double concept_accuracy(const std::string& valuation_id, const std::vector<double>& params,
                        const std::vector<ConceptExample>& examples) {
    NeuralParams<double> p;
    p[valuation_id] = params;
    std::size_t correct = 0;
    for (const ConceptExample& ex : examples) {
        std::vector<Tensor<double>> args;
        for (const auto& row : ex.rows) args.emplace_back(std::vector<std::size_t>{1, row.size()}, row);
        Layout layout = ex.rows[0].size() == 11 ? Layout::kandinsky11 : Layout::clevr19;
        double prob = valuate(valuation_id, args, layout, p)[0];
        if ((prob >= 0.5) == (ex.label != 0)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace difflog
