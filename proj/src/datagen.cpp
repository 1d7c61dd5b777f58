#include "difflog/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "difflog/rng.hpp"

namespace difflog {

namespace {

// Thresholds shared by the crisp oracle semantics and the concept-set
// generators, so labels and learned concepts agree by construction.
constexpr double kClosebyTrue = 0.1;
constexpr double kClosebyFalse = 0.2;
constexpr double kOnlineTrue = 0.01;
constexpr double kOnlineFalse = 0.05;
constexpr double kSideMargin = 0.1;   // leftside <= 0.4, rightside >= 0.6
constexpr double kFrontMargin = 0.1;  // depth gap between front/back pairs
constexpr std::size_t kResampleCap = 100000;

const char* kKandinskyColors[] = {"red", "yellow", "blue"};
const char* kKandinskyShapes[] = {"square", "circle", "triangle"};
const char* kClevrColors[] = {"cyan", "blue", "yellow", "purple", "red", "green", "gray", "brown"};
const char* kClevrShapes[] = {"sphere", "cube", "cylinder"};

double center_distance(const SceneObject& a, const SceneObject& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double scene_residual(const std::vector<SceneObject>& objs, const std::vector<std::size_t>& idx) {
    std::vector<std::array<double, 2>> pts;
    for (std::size_t i : idx) pts.push_back({objs[i].x, objs[i].y});
    return linear_fit_residual(pts);
}

// --- canonical pattern programs ---------------------------------------------

std::string kandinsky_language(std::size_t n_objects, bool attrs, const std::string& preds) {
    std::ostringstream out;
    out << "datatype image\ndatatype object\n";
    if (attrs) out << "datatype color\ndatatype shape\n";
    out << "constant img : image input\n";
    for (std::size_t i = 1; i <= n_objects; ++i) out << "constant obj" << i << " : object object\n";
    if (attrs) {
        for (const char* c : kKandinskyColors) out << "constant " << c << " : color attribute\n";
        for (const char* s : kKandinskyShapes) out << "constant " << s << " : shape attribute\n";
    }
    out << preds;
    return out.str();
}

std::string clevr_language(std::size_t n_objects, const std::string& preds) {
    std::ostringstream out;
    out << "datatype image\ndatatype object\ndatatype color\ndatatype shape\ndatatype size\ndatatype material\n";
    out << "constant img : image input\n";
    for (std::size_t i = 0; i < n_objects; ++i) out << "constant obj" << i << " : object object\n";
    for (const char* c : kClevrColors) out << "constant " << c << " : color attribute\n";
    for (const char* s : kClevrShapes) out << "constant " << s << " : shape attribute\n";
    out << "constant large : size attribute\nconstant small : size attribute\n";
    out << "constant rubber : material attribute\nconstant metal : material attribute\n";
    out << preds;
    return out.str();
}

const char* kPairHelperRules =
    "same_shape_pair(X,Y):-shape(X,Z),shape(Y,Z).\n"
    "same_color_pair(X,Y):-color(X,Z),color(Y,Z).\n"
    "diff_color_pair(X,Y):-color(X,Z),color(Y,W),diff_color(Z,W).\n";

std::string diff_color_bk() {
    std::ostringstream out;
    for (const char* a : kKandinskyColors)
        for (const char* b : kKandinskyColors)
            if (std::string(a) != b) out << "diff_color(" << a << "," << b << ").\n";
    return out.str();
}

std::string diff_shape_bk() {
    std::ostringstream out;
    for (const char* a : kKandinskyShapes)
        for (const char* b : kKandinskyShapes)
            if (std::string(a) != b) out << "diff_shape(" << a << "," << b << ").\n";
    return out.str();
}

std::vector<PatternSpec> build_patterns() {
    std::vector<PatternSpec> out;

    const std::string kandinsky_neural =
        "neural_pred in/2[object,image] = in\n"
        "neural_pred shape/2[object,shape] = shape\n"
        "neural_pred color/2[object,color] = color\n";

    {
        PatternSpec p;
        p.name = "twopairs";
        p.dataset = Dataset::kandinsky;
        p.objects = 4;
        p.language_text = kandinsky_language(4, true,
                                             "pred kp/1[image]\n"
                                             "pred same_shape_pair/2[object,object]\n"
                                             "pred same_color_pair/2[object,object]\n"
                                             "pred diff_color_pair/2[object,object]\n"
                                             "pred diff_color/2[color,color]\n"
                                             "pred diff_shape/2[shape,shape]\n" +
                                                 kandinsky_neural);
        p.rules_text =
            "kp(X):-in(O1,X),in(O2,X),in(O3,X),in(O4,X),same_shape_pair(O1,O2),same_color_pair(O1,O2),"
            "same_shape_pair(O3,O4),diff_color_pair(O3,O4).\n" +
            std::string(kPairHelperRules);
        p.bk_text = diff_color_bk() + diff_shape_bk();
        p.targets = {"kp(img)"};
        out.push_back(std::move(p));
    }
    {
        PatternSpec p;
        p.name = "threepairs";
        p.dataset = Dataset::kandinsky;
        p.objects = 6;
        p.language_text = kandinsky_language(6, true,
                                             "pred kp/1[image]\n"
                                             "pred same_shape_pair/2[object,object]\n"
                                             "pred same_color_pair/2[object,object]\n"
                                             "pred diff_color_pair/2[object,object]\n"
                                             "pred diff_color/2[color,color]\n"
                                             "pred diff_shape/2[shape,shape]\n" +
                                                 kandinsky_neural);
        p.rules_text =
            "kp(X):-in(O1,X),in(O2,X),in(O3,X),in(O4,X),in(O5,X),in(O6,X),same_shape_pair(O1,O2),"
            "same_color_pair(O1,O2),same_shape_pair(O3,O4),diff_color_pair(O3,O4),same_shape_pair(O5,O6),"
            "diff_color_pair(O5,O6).\n" +
            std::string(kPairHelperRules);
        p.bk_text = diff_color_bk() + diff_shape_bk();
        p.targets = {"kp(img)"};
        out.push_back(std::move(p));
    }
    {
        PatternSpec p;
        p.name = "closeby";
        p.dataset = Dataset::kandinsky;
        p.objects = 4;
        p.language_text = kandinsky_language(4, false,
                                             "pred kp/1[image]\n"
                                             "neural_pred in/2[object,image] = in\n"
                                             "neural_pred closeby/2[object,object] = closeby\n");
        p.rules_text = "kp(X):-in(O1,X),in(O2,X),closeby(O1,O2).\n";
        p.targets = {"kp(img)"};
        out.push_back(std::move(p));
    }
    {
        PatternSpec p;
        p.name = "redtriangle";
        p.dataset = Dataset::kandinsky;
        p.objects = 6;
        p.language_text = kandinsky_language(6, true,
                                             "pred kp/1[image]\n"
                                             "pred diff_shape_pair/2[object,object]\n"
                                             "pred diff_color_pair/2[object,object]\n"
                                             "pred diff_color/2[color,color]\n"
                                             "pred diff_shape/2[shape,shape]\n" +
                                                 kandinsky_neural +
                                                 "neural_pred closeby/2[object,object] = closeby\n");
        p.rules_text =
            "kp(X):-in(O1,X),in(O2,X),closeby(O1,O2),color(O1,red),shape(O1,triangle),diff_shape_pair(O1,O2),"
            "diff_color_pair(O1,O2).\n"
            "diff_shape_pair(X,Y):-shape(X,Z),shape(Y,W),diff_shape(Z,W).\n"
            "diff_color_pair(X,Y):-color(X,Z),color(Y,W),diff_color(Z,W).\n";
        p.bk_text = diff_color_bk() + diff_shape_bk();
        p.targets = {"kp(img)"};
        out.push_back(std::move(p));
    }
    {
        PatternSpec p;
        p.name = "onlinepair";
        p.dataset = Dataset::kandinsky;
        p.objects = 5;
        p.language_text = kandinsky_language(5, true,
                                             "pred kp/1[image]\n"
                                             "pred same_shape_pair/2[object,object]\n"
                                             "pred same_color_pair/2[object,object]\n" +
                                                 kandinsky_neural +
                                                 "neural_pred online/5[object,object,object,object,object] = online\n");
        p.rules_text =
            "kp(X):-in(O1,X),in(O2,X),in(O3,X),in(O4,X),in(O5,X),online(O1,O2,O3,O4,O5),"
            "same_shape_pair(O1,O2),same_color_pair(O1,O2).\n"
            "same_shape_pair(X,Y):-shape(X,Z),shape(Y,Z).\n"
            "same_color_pair(X,Y):-color(X,Z),color(Y,Z).\n";
        p.targets = {"kp(img)"};
        out.push_back(std::move(p));
    }
    {
        PatternSpec p;
        p.name = "ninecircles";
        p.dataset = Dataset::kandinsky;
        p.objects = 9;
        p.language_text = kandinsky_language(9, true,
                                             "pred kp/1[image]\n"
                                             "pred has_red_triple/1[image]\n"
                                             "pred has_yellow_triple/1[image]\n"
                                             "pred has_blue_triple/1[image]\n"
                                             "neural_pred in/2[object,image] = in\n"
                                             "neural_pred color/2[object,color] = color\n");
        p.rules_text =
            "kp(X):-has_red_triple(X),has_yellow_triple(X),has_blue_triple(X).\n"
            "has_red_triple(X):-in(O1,X),in(O2,X),in(O3,X),color(O1,red),color(O2,red),color(O3,red).\n"
            "has_yellow_triple(X):-in(O1,X),in(O2,X),in(O3,X),color(O1,yellow),color(O2,yellow),color(O3,yellow).\n"
            "has_blue_triple(X):-in(O1,X),in(O2,X),in(O3,X),color(O1,blue),color(O2,blue),color(O3,blue).\n";
        p.targets = {"kp(img)"};
        out.push_back(std::move(p));
    }

    const std::string clevr_neural =
        "neural_pred in/2[object,image] = in\n"
        "neural_pred shape/2[object,shape] = shape\n"
        "neural_pred size/2[object,size] = size\n"
        "neural_pred material/2[object,material] = material\n"
        "neural_pred color/2[object,color] = color\n";

    {
        PatternSpec p;
        p.name = "clevr3";
        p.dataset = Dataset::clevr;
        p.objects = 6;
        p.language_text = clevr_language(6,
                                         "pred kp1/1[image]\npred kp2/1[image]\npred kp3/1[image]\n" + clevr_neural);
        p.rules_text =
            "kp1(X):-in(O1,X),in(O2,X),size(O1,large),shape(O1,cube),size(O2,large),shape(O2,cylinder).\n"
            "kp2(X):-in(O1,X),in(O2,X),size(O1,small),material(O1,metal),shape(O1,cube),size(O2,small),"
            "shape(O2,sphere).\n"
            "kp3(X):-in(O1,X),in(O2,X),size(O1,large),color(O1,blue),shape(O1,sphere),size(O2,small),"
            "color(O2,yellow),shape(O2,sphere).\n";
        p.targets = {"kp1(img)", "kp2(img)", "kp3(img)"};
        out.push_back(std::move(p));
    }
    {
        PatternSpec p;
        p.name = "clevr7";
        p.dataset = Dataset::clevr;
        p.objects = 6;
        p.language_text = clevr_language(
            6,
            "pred kp1/1[image]\npred kp2/1[image]\npred kp3/1[image]\npred kp4/1[image]\npred kp5/1[image]\n"
            "pred kp6/1[image]\npred kp7/1[image]\n"
            "pred has_3_spheres_left/1[image]\n"
            "pred has_3_metal_cylinders_right/1[image]\n" +
                clevr_neural +
                "neural_pred leftside/1[object] = leftside\n"
                "neural_pred rightside/1[object] = rightside\n"
                "neural_pred front/2[object,object] = front\n");
        p.rules_text =
            "kp1(X):-in(O1,X),in(O2,X),size(O1,large),shape(O1,cube),size(O2,large),shape(O2,cylinder).\n"
            "kp2(X):-in(O1,X),in(O2,X),size(O1,small),material(O1,metal),shape(O1,cube),size(O2,small),"
            "shape(O2,sphere).\n"
            "kp3(X):-in(O1,X),in(O2,X),in(O3,X),color(O1,cyan),front(O1,O2),front(O1,O3),color(O2,red),"
            "color(O3,red).\n"
            "kp4(X):-in(O1,X),in(O2,X),in(O3,X),in(O4,X),size(O1,small),color(O1,green),size(O2,small),"
            "color(O2,brown),size(O3,small),color(O3,purple),size(O4,small).\n"
            "kp5(X):-has_3_spheres_left(X).\n"
            "kp5(X):-has_3_spheres_left(X),has_3_metal_cylinders_right(X).\n"
            "kp6(X):-has_3_metal_cylinders_right(X).\n"
            "kp7(X):-in(O1,X),in(O2,X),size(O1,large),color(O1,blue),shape(O1,sphere),size(O2,small),"
            "color(O2,yellow),shape(O2,sphere).\n"
            "has_3_spheres_left(X):-in(O1,X),in(O2,X),in(O3,X),shape(O1,sphere),shape(O2,sphere),"
            "shape(O3,sphere),leftside(O1),leftside(O2),leftside(O3).\n"
            "has_3_metal_cylinders_right(X):-in(O1,X),in(O2,X),in(O3,X),shape(O1,cylinder),shape(O2,cylinder),"
            "shape(O3,cylinder),material(O1,metal),material(O2,metal),material(O3,metal),rightside(O1),"
            "rightside(O2),rightside(O3).\n";
        p.targets = {"kp1(img)", "kp2(img)", "kp3(img)", "kp4(img)", "kp5(img)", "kp6(img)", "kp7(img)"};
        out.push_back(std::move(p));
    }
    return out;
}

const std::vector<PatternSpec>& patterns() {
    static const std::vector<PatternSpec> specs = build_patterns();
    return specs;
}

}  // namespace

const PatternSpec& pattern_spec(const std::string& name) {
    for (const PatternSpec& p : patterns())
        if (p.name == name) return p;
    throw ValidationError("unknown pattern '" + name + "'");
}

std::vector<std::string> pattern_names() {
    std::vector<std::string> out;
    for (const PatternSpec& p : patterns()) out.push_back(p.name);
    return out;
}

std::vector<std::string> kandinsky_pattern_names() {
    std::vector<std::string> out;
    for (const PatternSpec& p : patterns())
        if (p.dataset == Dataset::kandinsky) out.push_back(p.name);
    return out;
}

BackgroundKnowledge parse_bk(const std::string& text, const Language& lang) {
    BackgroundKnowledge bk;
    for (const Atom& a : parse_ground_atoms(text, lang)) bk.atoms.insert(a);
    return bk;
}

// --- crisp scene facts -------------------------------------------------------

FactSet scene_facts(const Scene& scene, const Language& lang) {
    FactSet facts;
    auto img = lang.constant_id("img");
    auto object_const = [&](std::size_t k) {
        std::size_t slot = scene.dataset == Dataset::kandinsky ? k + 1 : k;
        auto id = lang.constant_id("obj" + std::to_string(slot));
        if (!id) throw ValidationError("scene has more objects than the language declares");
        return *id;
    };
    auto add = [&](const std::string& pred, std::vector<std::uint32_t> args) {
        auto pid = lang.predicate_id(pred);
        if (!pid) return;
        Atom a;
        a.pred = *pid;
        for (std::uint32_t c : args) a.terms.push_back(Term::con(c));
        facts.insert(a);
    };
    auto attr = [&](const std::string& name) {
        auto id = lang.constant_id(name);
        if (!id) throw ValidationError("attribute '" + name + "' is not declared in the language");
        return *id;
    };

    const auto& objs = scene.objects;
    for (std::size_t k = 0; k < objs.size(); ++k) {
        std::uint32_t oc = object_const(k);
        if (img) add("in", {oc, *img});
        if (lang.predicate_id("shape")) add("shape", {oc, attr(objs[k].shape)});
        if (lang.predicate_id("color")) add("color", {oc, attr(objs[k].color)});
        if (scene.dataset == Dataset::clevr) {
            if (lang.predicate_id("size")) add("size", {oc, attr(objs[k].size_category)});
            if (lang.predicate_id("material")) add("material", {oc, attr(objs[k].material)});
            if (objs[k].x < 0.5) add("leftside", {oc});
            if (objs[k].x > 0.5) add("rightside", {oc});
        }
    }
    if (lang.predicate_id("closeby")) {
        for (std::size_t i = 0; i < objs.size(); ++i)
            for (std::size_t j = 0; j < objs.size(); ++j)
                if (i != j && center_distance(objs[i], objs[j]) <= kClosebyTrue)
                    add("closeby", {object_const(i), object_const(j)});
    }
    if (lang.predicate_id("front")) {
        for (std::size_t i = 0; i < objs.size(); ++i)
            for (std::size_t j = 0; j < objs.size(); ++j)
                if (i != j && objs[i].y < objs[j].y) add("front", {object_const(i), object_const(j)});
    }
    if (lang.predicate_id("online") && objs.size() >= 5) {
        // every ordered 5-tuple of distinct collinear objects
        std::vector<std::size_t> idx(objs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<std::size_t> combo;
        std::function<void(std::size_t)> choose = [&](std::size_t from) {
            if (combo.size() == 5) {
                if (scene_residual(objs, combo) <= kOnlineTrue) {
                    std::vector<std::size_t> perm = combo;
                    std::sort(perm.begin(), perm.end());
                    do {
                        std::vector<std::uint32_t> args;
                        for (std::size_t i : perm) args.push_back(object_const(i));
                        add("online", args);
                    } while (std::next_permutation(perm.begin(), perm.end()));
                }
                return;
            }
            for (std::size_t i = from; i < idx.size(); ++i) {
                combo.push_back(idx[i]);
                choose(i + 1);
                combo.pop_back();
            }
        };
        choose(0);
    }
    return facts;
}

// --- kandinsky generation ----------------------------------------------------

namespace {

struct PatternContext {
    Language lang;
    std::vector<Clause> rules;
    BackgroundKnowledge bk;
    Atom target;

    explicit PatternContext(const PatternSpec& spec) {
        lang = parse_language(spec.language_text);
        rules = parse_rules(spec.rules_text, lang);
        bk = parse_bk(spec.bk_text, lang);
        auto kp = lang.predicate_id("kp");
        target = Atom{*kp, {Term::con(*lang.constant_id("img"))}};
    }

    bool positive(const Scene& scene) const {
        FactSet facts = scene_facts(scene, lang);
        for (const Atom& a : bk.atoms) facts.insert(a);
        return entails(rules, facts, target, lang);
    }
};

SceneObject random_kandinsky_object(Rng& rng) {
    SceneObject o;
    o.shape = rng.pick(kKandinskyShapes);
    o.color = rng.pick(kKandinskyColors);
    o.size = rng.uniform(0.04, 0.12);
    return o;
}

// Scatters object centers so every pair is at least `separation(i,j)` apart.
template <typename SepFn>
bool scatter(std::vector<SceneObject>& objs, Rng& rng, SepFn separation) {
    for (std::size_t i = 0; i < objs.size(); ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            objs[i].x = rng.uniform(0.1, 0.9);
            objs[i].y = rng.uniform(0.1, 0.9);
            placed = true;
            for (std::size_t j = 0; j < i; ++j)
                if (center_distance(objs[i], objs[j]) < separation(objs[i], objs[j])) {
                    placed = false;
                    break;
                }
        }
        if (!placed) return false;
    }
    return true;
}

double overlap_sep(const SceneObject& a, const SceneObject& b) { return 0.5 * (a.size + b.size) + 0.01; }

// Patterns whose program uses closeby keep every non-close pair out of the
// (0.1, 0.2) distance band where the crisp threshold and the fitted concept
// could disagree.
double band_sep(const SceneObject&, const SceneObject&) { return kClosebyFalse + 0.01; }

// Places `other` close to `anchor`: distance above the overlap limit, at most
// the closeby threshold.
bool place_close(SceneObject& other, const SceneObject& anchor, Rng& rng) {
    double half = 0.5 * (anchor.size + other.size);
    if (half + 0.005 >= kClosebyTrue) return false;
    for (int attempt = 0; attempt < 100; ++attempt) {
        double d = rng.uniform(half + 0.005, kClosebyTrue);
        double a = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        other.x = anchor.x + d * std::cos(a);
        other.y = anchor.y + d * std::sin(a);
        if (other.x > 0.02 && other.x < 0.98 && other.y > 0.02 && other.y < 0.98) return true;
    }
    return false;
}

Scene propose_kandinsky_positive(const std::string& pattern, Rng& rng) {
    Scene scene;
    scene.dataset = Dataset::kandinsky;
    scene.label = 1;
    auto& objs = scene.objects;

    if (pattern == "twopairs" || pattern == "threepairs") {
        std::size_t pairs = pattern == "twopairs" ? 2 : 3;
        for (std::size_t p = 0; p < pairs; ++p) {
            SceneObject a = random_kandinsky_object(rng);
            SceneObject b = random_kandinsky_object(rng);
            b.shape = a.shape;
            if (p == 0) {
                b.color = a.color;  // one pair shares the color
            } else {
                while (b.color == a.color) b.color = rng.pick(kKandinskyColors);
            }
            objs.push_back(a);
            objs.push_back(b);
        }
        rng.shuffle(objs);
        if (!scatter(objs, rng, overlap_sep)) objs.clear();
    } else if (pattern == "closeby") {
        for (int i = 0; i < 4; ++i) objs.push_back(random_kandinsky_object(rng));
        objs[0].size = rng.uniform(0.04, 0.08);
        objs[1].size = rng.uniform(0.04, 0.08);
        if (!scatter(objs, rng, band_sep) || !place_close(objs[1], objs[0], rng)) objs.clear();
    } else if (pattern == "redtriangle") {
        for (int i = 0; i < 6; ++i) objs.push_back(random_kandinsky_object(rng));
        objs[0].shape = "triangle";
        objs[0].color = "red";
        objs[0].size = rng.uniform(0.04, 0.08);
        objs[1].size = rng.uniform(0.04, 0.08);
        while (objs[1].shape == "triangle") objs[1].shape = rng.pick(kKandinskyShapes);
        while (objs[1].color == "red") objs[1].color = rng.pick(kKandinskyColors);
        if (!scatter(objs, rng, band_sep) || !place_close(objs[1], objs[0], rng)) objs.clear();
    } else if (pattern == "onlinepair") {
        for (int i = 0; i < 5; ++i) objs.push_back(random_kandinsky_object(rng));
        objs[1].shape = objs[0].shape;
        objs[1].color = objs[0].color;
        double cx = rng.uniform(0.3, 0.7), cy = rng.uniform(0.3, 0.7);
        double angle = rng.uniform(0.0, 3.14159265358979323846);
        double dx = std::cos(angle), dy = std::sin(angle);
        std::vector<double> ts;
        for (int i = 0; i < 5; ++i) ts.push_back(rng.uniform(-0.35, 0.35));
        std::sort(ts.begin(), ts.end());
        bool ok = true;
        for (int i = 0; i < 5 && ok; ++i) {
            double jitter = rng.uniform(-0.004, 0.004);
            objs[static_cast<std::size_t>(i)].x = cx + ts[static_cast<std::size_t>(i)] * dx - jitter * dy;
            objs[static_cast<std::size_t>(i)].y = cy + ts[static_cast<std::size_t>(i)] * dy + jitter * dx;
            ok = objs[static_cast<std::size_t>(i)].x > 0.02 && objs[static_cast<std::size_t>(i)].x < 0.98 &&
                 objs[static_cast<std::size_t>(i)].y > 0.02 && objs[static_cast<std::size_t>(i)].y < 0.98;
            for (int j = 0; j < i && ok; ++j)
                ok = center_distance(objs[static_cast<std::size_t>(i)], objs[static_cast<std::size_t>(j)]) >
                     overlap_sep(objs[static_cast<std::size_t>(i)], objs[static_cast<std::size_t>(j)]);
        }
        std::vector<std::size_t> all{0, 1, 2, 3, 4};
        if (!ok || scene_residual(objs, all) > kOnlineTrue) objs.clear();
    } else if (pattern == "ninecircles") {
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 3; ++i) {
                SceneObject o = random_kandinsky_object(rng);
                o.shape = "circle";
                o.color = kKandinskyColors[c];
                objs.push_back(o);
            }
        rng.shuffle(objs);
        if (!scatter(objs, rng, overlap_sep)) objs.clear();
    } else {
        throw ValidationError("unknown pattern '" + pattern + "'");
    }
    return scene;
}

Scene propose_kandinsky_negative(const std::string& pattern, std::size_t n_objects, Rng& rng) {
    Scene scene;
    scene.dataset = Dataset::kandinsky;
    scene.label = 0;
    for (std::size_t i = 0; i < n_objects; ++i) scene.objects.push_back(random_kandinsky_object(rng));
    if (pattern == "ninecircles")
        for (auto& o : scene.objects) o.shape = "circle";
    bool banded = pattern == "closeby" || pattern == "redtriangle";
    if (!scatter(scene.objects, rng, banded ? band_sep : overlap_sep)) scene.objects.clear();
    if (pattern == "onlinepair" && !scene.objects.empty()) {
        std::vector<std::size_t> all{0, 1, 2, 3, 4};
        double r = scene_residual(scene.objects, all);
        if (r > kOnlineTrue && r < kOnlineFalse) scene.objects.clear();  // ambiguous band
    }
    return scene;
}

}  // namespace

std::vector<Scene> gen_kandinsky(const std::string& pattern, std::size_t n_pos, std::size_t n_neg,
                                 std::uint64_t seed) {
    const PatternSpec& spec = pattern_spec(pattern);
    if (spec.dataset != Dataset::kandinsky) throw ValidationError("'" + pattern + "' is not a Kandinsky pattern");
    PatternContext ctx(spec);
    Rng rng(seed);

    std::vector<Scene> out;
    std::size_t budget = kResampleCap * std::max<std::size_t>(1, n_pos + n_neg);
    std::size_t attempts = 0;
    while (out.size() < n_pos) {
        if (++attempts > budget) throw std::runtime_error("sampling budget exhausted for '" + pattern + "' positives");
        Scene s = propose_kandinsky_positive(pattern, rng);
        if (s.objects.empty() || !ctx.positive(s)) continue;
        out.push_back(std::move(s));
    }
    std::size_t negatives = 0;
    attempts = 0;
    while (negatives < n_neg) {
        if (++attempts > budget) throw std::runtime_error("sampling budget exhausted for '" + pattern + "' negatives");
        Scene s = propose_kandinsky_negative(pattern, spec.objects, rng);
        if (s.objects.empty() || ctx.positive(s)) continue;
        out.push_back(std::move(s));
        ++negatives;
    }
    return out;
}

// --- clevr generation ----------------------------------------------------------

namespace {

struct ClevrContext {
    Language lang;
    std::vector<Clause> rules;
    std::vector<Atom> kp_atoms;

    explicit ClevrContext(const PatternSpec& spec) {
        lang = parse_language(spec.language_text);
        rules = parse_rules(spec.rules_text, lang);
        for (const std::string& t : spec.targets) {
            std::string pred = t.substr(0, t.find('('));
            kp_atoms.push_back(Atom{*lang.predicate_id(pred), {Term::con(*lang.constant_id("img"))}});
        }
    }

    // The set of class rules the scene satisfies.
    std::vector<int> classes(const Scene& scene) const {
        FactSet closure = forward_chain(rules, scene_facts(scene, lang), lang);
        std::vector<int> out;
        for (std::size_t i = 0; i < kp_atoms.size(); ++i)
            if (closure.contains(kp_atoms[i])) out.push_back(static_cast<int>(i) + 1);
        return out;
    }
};

SceneObject random_clevr_object(Rng& rng) {
    SceneObject o;
    o.shape = rng.pick(kClevrShapes);
    o.color = rng.pick(kClevrColors);
    o.size_category = rng.uniform() < 0.5 ? "large" : "small";
    o.material = rng.uniform() < 0.5 ? "rubber" : "metal";
    o.z = rng.uniform(0.1, 0.9);
    return o;
}

// x positions avoid the (0.45, 0.55) band around the left/right threshold.
double clevr_x(Rng& rng) {
    double u = rng.uniform();
    return u < 0.5 ? 0.05 + u * 0.8 : 0.55 + (u - 0.5) * 0.8;
}
double clevr_x_left(Rng& rng) { return rng.uniform(0.05, 0.5 - kSideMargin); }
double clevr_x_right(Rng& rng) { return rng.uniform(0.5 + kSideMargin, 0.95); }

// Depth slots keep every pair at least 0.13 apart so front/behind is crisp.
std::vector<double> clevr_depths(std::size_t n, Rng& rng) {
    std::vector<double> slots{0.05, 0.2, 0.35, 0.5, 0.65, 0.8};
    rng.shuffle(slots);
    slots.resize(n);
    for (double& y : slots) y += rng.uniform(-0.01, 0.01);
    return slots;
}

Scene propose_clevr(int variant, int cls, Rng& rng) {
    Scene scene;
    scene.dataset = Dataset::clevr;
    scene.label = cls;
    auto& objs = scene.objects;

    auto planted = [&](int n) {
        for (int i = 0; i < n; ++i) objs.push_back(random_clevr_object(rng));
    };

    if (cls == 1) {  // large cube + large cylinder
        planted(2);
        objs[0].size_category = "large";
        objs[0].shape = "cube";
        objs[1].size_category = "large";
        objs[1].shape = "cylinder";
    } else if (cls == 2) {  // small metal cube + small sphere
        planted(2);
        objs[0].size_category = "small";
        objs[0].material = "metal";
        objs[0].shape = "cube";
        objs[1].size_category = "small";
        objs[1].shape = "sphere";
    } else if ((variant == 3 && cls == 3) || (variant == 7 && cls == 7)) {
        planted(2);  // large blue sphere + small yellow sphere
        objs[0].size_category = "large";
        objs[0].color = "blue";
        objs[0].shape = "sphere";
        objs[1].size_category = "small";
        objs[1].color = "yellow";
        objs[1].shape = "sphere";
    } else if (cls == 3) {  // cyan object in front of two red objects
        planted(3);
        objs[0].color = "cyan";
        objs[1].color = "red";
        objs[2].color = "red";
    } else if (cls == 4) {  // four small objects: green, brown, purple + one more
        planted(4);
        const char* colors[] = {"green", "brown", "purple"};
        for (int i = 0; i < 3; ++i) {
            objs[static_cast<std::size_t>(i)].size_category = "small";
            objs[static_cast<std::size_t>(i)].color = colors[i];
        }
        objs[3].size_category = "small";
    } else if (cls == 5) {  // three spheres on the left
        planted(3);
        for (int i = 0; i < 3; ++i) objs[static_cast<std::size_t>(i)].shape = "sphere";
    } else if (cls == 6) {  // three metal cylinders on the right
        planted(3);
        for (int i = 0; i < 3; ++i) {
            objs[static_cast<std::size_t>(i)].shape = "cylinder";
            objs[static_cast<std::size_t>(i)].material = "metal";
        }
    } else {
        throw ValidationError("bad clevr class");
    }

    std::size_t planted_n = objs.size();
    std::size_t total = std::max<std::size_t>(4, planted_n);
    total += rng.index(7 - total);  // up to 6 objects
    while (objs.size() < total) objs.push_back(random_clevr_object(rng));

    std::vector<double> depths = clevr_depths(objs.size(), rng);
    for (std::size_t i = 0; i < objs.size(); ++i) {
        objs[i].y = depths[i];
        objs[i].x = clevr_x(rng);
    }
    if (variant == 7 && cls == 3) {
        // the cyan object sits in front (smallest depth) of both reds
        std::size_t front_obj = 0;
        for (std::size_t i = 1; i < objs.size(); ++i)
            if (objs[i].y < objs[front_obj].y) front_obj = i;
        std::swap(objs[0].y, objs[front_obj].y);
    } else if (variant == 7 && cls == 5) {
        for (int i = 0; i < 3; ++i) objs[static_cast<std::size_t>(i)].x = clevr_x_left(rng);
    } else if (variant == 7 && cls == 6) {
        for (int i = 0; i < 3; ++i) objs[static_cast<std::size_t>(i)].x = clevr_x_right(rng);
    }
    rng.shuffle(objs);
    return scene;
}

}  // namespace

std::vector<Scene> gen_clevr_hans(int variant, std::size_t per_class, std::uint64_t seed) {
    if (variant != 3 && variant != 7) throw ValidationError("clevr-hans variant must be 3 or 7");
    const PatternSpec& spec = pattern_spec(variant == 3 ? "clevr3" : "clevr7");
    ClevrContext ctx(spec);
    Rng rng(seed);

    std::vector<Scene> out;
    const int n_classes = variant;
    for (int cls = 1; cls <= n_classes; ++cls) {
        std::size_t produced = 0, attempts = 0;
        while (produced < per_class) {
            if (++attempts > kResampleCap)
                throw std::runtime_error("sampling budget exhausted for clevr-hans class " + std::to_string(cls));
            Scene s = propose_clevr(variant, cls, rng);
            std::vector<int> classes = ctx.classes(s);
            if (classes.size() != 1 || classes[0] != cls) continue;  // ambiguous or failed plant
            out.push_back(std::move(s));
            ++produced;
        }
    }
    return out;
}

// --- tensor encoding -----------------------------------------------------------

ObjectTensor scene_to_tensor(const std::vector<Scene>& scenes, std::size_t max_objects) {
    if (scenes.empty()) throw ValidationError("no scenes to encode");
    Dataset ds = scenes[0].dataset;
    for (const Scene& s : scenes) {
        if (s.dataset != ds) throw ValidationError("mixed datasets in one batch");
        if (s.objects.size() > max_objects)
            throw ValidationError("scene has " + std::to_string(s.objects.size()) + " objects, limit is " +
                                  std::to_string(max_objects));
    }
    Layout layout = ds == Dataset::kandinsky ? Layout::kandinsky11 : Layout::clevr19;
    std::size_t slots = ds == Dataset::kandinsky ? max_objects + 1 : max_objects;

    ObjectTensor Z;
    Z.layout = layout;
    Z.data = Tensor<double>({scenes.size(), slots, layout_dim(layout)}, 0.0);
    for (std::size_t b = 0; b < scenes.size(); ++b) {
        const Scene& s = scenes[b];
        for (std::size_t k = 0; k < s.objects.size(); ++k) {
            const SceneObject& o = s.objects[k];
            std::size_t slot = ds == Dataset::kandinsky ? k + 1 : k;
            auto set = [&](std::size_t col, double v) { Z.data.at(b, slot, col) = v; };
            if (ds == Dataset::kandinsky) {
                set(0, o.x - 0.5 * o.size);
                set(1, o.y - 0.5 * o.size);
                set(2, o.x + 0.5 * o.size);
                set(3, o.y + 0.5 * o.size);
                for (int c = 0; c < 3; ++c)
                    if (o.color == kKandinskyColors[c]) set(4 + static_cast<std::size_t>(c), 1.0);
                for (int c = 0; c < 3; ++c)
                    if (o.shape == kKandinskyShapes[c]) set(7 + static_cast<std::size_t>(c), 1.0);
                set(10, 1.0);
            } else {
                set(0, 1.0);
                set(1, o.x);
                set(2, o.y);
                set(3, o.z);
                for (int c = 0; c < 3; ++c)
                    if (o.shape == kClevrShapes[c]) set(4 + static_cast<std::size_t>(c), 1.0);
                set(7, o.size_category == "large" ? 1.0 : 0.0);
                set(8, o.size_category == "small" ? 1.0 : 0.0);
                set(9, o.material == "rubber" ? 1.0 : 0.0);
                set(10, o.material == "metal" ? 1.0 : 0.0);
                for (int c = 0; c < 8; ++c)
                    if (o.color == kClevrColors[c]) set(11 + static_cast<std::size_t>(c), 1.0);
            }
        }
    }
    return Z;
}

ObjectTensor add_noise(const ObjectTensor& Z, double epsilon, std::uint64_t seed) {
    if (epsilon < 0.0 || epsilon >= 1.0) throw ValidationError("epsilon must be in [0, 1)");
    ObjectTensor out = Z;
    if (epsilon == 0.0) return out;
    Rng rng(seed);

    auto mix_slice = [&](std::size_t b, std::size_t slot, std::size_t offset, std::size_t width) {
        // convex mixture with a uniform simplex sample keeps the slice sum <= 1
        std::vector<double> noise(width);
        double total = 0.0;
        for (double& v : noise) {
            v = -std::log(1.0 - rng.uniform());
            total += v;
        }
        for (std::size_t k = 0; k < width; ++k) {
            double& cell = out.data.at(b, slot, offset + k);
            cell = (1.0 - epsilon) * cell + epsilon * noise[k] / total;
        }
    };
    auto jitter = [&](std::size_t b, std::size_t slot, std::size_t col) {
        double& cell = out.data.at(b, slot, col);
        cell = std::clamp(cell + rng.uniform(-epsilon * 0.05, epsilon * 0.05), 0.0, 1.0);
    };

    const std::size_t objectness = layout_objectness_column(Z.layout);
    for (std::size_t b = 0; b < Z.batch(); ++b)
        for (std::size_t slot = 0; slot < Z.slots(); ++slot) {
            if (Z.at(b, slot, objectness) <= 0.0) continue;  // padding stays zero
            if (Z.layout == Layout::kandinsky11) {
                for (std::size_t col = 0; col < 4; ++col) jitter(b, slot, col);
                if (out.data.at(b, slot, 2) <= out.data.at(b, slot, 0))
                    out.data.at(b, slot, 2) = out.data.at(b, slot, 0) + 1e-3;
                if (out.data.at(b, slot, 3) <= out.data.at(b, slot, 1))
                    out.data.at(b, slot, 3) = out.data.at(b, slot, 1) + 1e-3;
                mix_slice(b, slot, 4, 3);
                mix_slice(b, slot, 7, 3);
            } else {
                for (std::size_t col = 1; col < 4; ++col) jitter(b, slot, col);
                mix_slice(b, slot, 4, 3);
                mix_slice(b, slot, 7, 2);
                mix_slice(b, slot, 9, 2);
                mix_slice(b, slot, 11, 8);
            }
        }
    return out;
}

// --- concept sets ---------------------------------------------------------------

namespace {

std::vector<double> kandinsky_row(double cx, double cy, double size, Rng& rng) {
    std::vector<double> row(11, 0.0);
    row[0] = cx - 0.5 * size;
    row[1] = cy - 0.5 * size;
    row[2] = cx + 0.5 * size;
    row[3] = cy + 0.5 * size;
    row[4 + rng.index(3)] = 1.0;
    row[7 + rng.index(3)] = 1.0;
    row[10] = 1.0;
    return row;
}

std::vector<double> clevr_row(double x, double y, double z, Rng& rng) {
    std::vector<double> row(19, 0.0);
    row[0] = 1.0;
    row[1] = x;
    row[2] = y;
    row[3] = z;
    row[4 + rng.index(3)] = 1.0;
    row[7 + rng.index(2)] = 1.0;
    row[9 + rng.index(2)] = 1.0;
    row[11 + rng.index(8)] = 1.0;
    return row;
}

ConceptExample closeby_example(bool positive, Rng& rng) {
    for (;;) {
        double d = positive ? rng.uniform(0.0, kClosebyTrue) : rng.uniform(kClosebyFalse, 0.7);
        double cx = rng.uniform(0.15, 0.85), cy = rng.uniform(0.15, 0.85);
        double a = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        double ox = cx + d * std::cos(a), oy = cy + d * std::sin(a);
        if (ox < 0.02 || ox > 0.98 || oy < 0.02 || oy > 0.98) continue;
        ConceptExample ex;
        ex.label = positive ? 1 : 0;
        ex.rows.push_back(kandinsky_row(cx, cy, rng.uniform(0.04, 0.12), rng));
        ex.rows.push_back(kandinsky_row(ox, oy, rng.uniform(0.04, 0.12), rng));
        return ex;
    }
}

ConceptExample online_example(bool positive, Rng& rng) {
    for (;;) {
        std::vector<std::array<double, 2>> pts;
        if (positive) {
            double cx = rng.uniform(0.3, 0.7), cy = rng.uniform(0.3, 0.7);
            double angle = rng.uniform(0.0, 3.14159265358979323846);
            double dx = std::cos(angle), dy = std::sin(angle);
            for (int i = 0; i < 5; ++i) {
                double t = rng.uniform(-0.35, 0.35);
                double j = rng.uniform(-0.008, 0.008);
                pts.push_back({cx + t * dx - j * dy, cy + t * dy + j * dx});
            }
        } else {
            for (int i = 0; i < 5; ++i) pts.push_back({rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)});
        }
        bool in_bounds = true;
        for (const auto& p : pts) in_bounds = in_bounds && p[0] > 0.02 && p[0] < 0.98 && p[1] > 0.02 && p[1] < 0.98;
        if (!in_bounds) continue;
        double r = linear_fit_residual(pts);
        if (positive ? r > kOnlineTrue : r < kOnlineFalse) continue;
        ConceptExample ex;
        ex.label = positive ? 1 : 0;
        for (const auto& p : pts) ex.rows.push_back(kandinsky_row(p[0], p[1], rng.uniform(0.04, 0.12), rng));
        return ex;
    }
}

ConceptExample side_example(const std::string& concept_name, bool positive, Rng& rng) {
    bool left_half = (concept_name == "leftside") == positive;
    double x = left_half ? rng.uniform(0.0, 0.5 - kSideMargin) : rng.uniform(0.5 + kSideMargin, 1.0);
    ConceptExample ex;
    ex.label = positive ? 1 : 0;
    ex.rows.push_back(clevr_row(x, rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng));
    return ex;
}

ConceptExample front_example(bool positive, Rng& rng) {
    double back = rng.uniform(kFrontMargin + 0.05, 1.0);
    double front = rng.uniform(0.0, back - kFrontMargin);
    double y1 = positive ? front : back;
    double y2 = positive ? back : front;
    ConceptExample ex;
    ex.label = positive ? 1 : 0;
    ex.rows.push_back(clevr_row(clevr_x(rng), y1, rng.uniform(0.0, 1.0), rng));
    ex.rows.push_back(clevr_row(clevr_x(rng), y2, rng.uniform(0.0, 1.0), rng));
    return ex;
}

}  // namespace

std::vector<ConceptExample> gen_concept_set(const std::string& concept_name, std::size_t n_per_class,
                                            std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ConceptExample> out;
    out.reserve(2 * n_per_class);
    for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
        bool positive = i < n_per_class;
        if (concept_name == "closeby") out.push_back(closeby_example(positive, rng));
        else if (concept_name == "online") out.push_back(online_example(positive, rng));
        else if (concept_name == "leftside" || concept_name == "rightside")
            out.push_back(side_example(concept_name, positive, rng));
        else if (concept_name == "front") out.push_back(front_example(positive, rng));
        else throw ValidationError("unknown concept '" + concept_name + "'");
    }
    return out;
}

// --- scene files -----------------------------------------------------------------

std::string write_scenes_jsonl(const std::vector<Scene>& scenes) {
    std::ostringstream out;
    for (const Scene& s : scenes) {
        nlohmann::json j;
        j["dataset"] = s.dataset == Dataset::kandinsky ? "kandinsky" : "clevr";
        j["label"] = s.label;
        nlohmann::json objs = nlohmann::json::array();
        for (const SceneObject& o : s.objects) {
            nlohmann::json jo;
            jo["shape"] = o.shape;
            jo["color"] = o.color;
            jo["x"] = o.x;
            jo["y"] = o.y;
            if (s.dataset == Dataset::kandinsky) {
                jo["size"] = o.size;
            } else {
                jo["size"] = o.size_category;
                jo["material"] = o.material;
                jo["z"] = o.z;
            }
            objs.push_back(std::move(jo));
        }
        j["objects"] = std::move(objs);
        out << j.dump() << "\n";
    }
    return out.str();
}

std::vector<Scene> read_scenes_jsonl(const std::string& text) {
    std::vector<Scene> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(line_no, 1, std::string("bad scene json: ") + e.what());
        }
        Scene s;
        std::string ds = j.at("dataset").get<std::string>();
        if (ds == "kandinsky") s.dataset = Dataset::kandinsky;
        else if (ds == "clevr") s.dataset = Dataset::clevr;
        else throw ValidationError(line_no, 1, "unknown dataset '" + ds + "'");
        s.label = j.at("label").get<int>();
        for (const auto& jo : j.at("objects")) {
            SceneObject o;
            o.shape = jo.at("shape").get<std::string>();
            o.color = jo.at("color").get<std::string>();
            o.x = jo.at("x").get<double>();
            o.y = jo.at("y").get<double>();
            if (s.dataset == Dataset::kandinsky) {
                o.size = jo.at("size").get<double>();
            } else {
                o.size_category = jo.at("size").get<std::string>();
                o.material = jo.at("material").get<std::string>();
                o.z = jo.at("z").get<double>();
            }
            s.objects.push_back(std::move(o));
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace difflog
