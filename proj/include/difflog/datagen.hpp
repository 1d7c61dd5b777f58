#ifndef DIFFLOG_DATAGEN_HPP
#define DIFFLOG_DATAGEN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "difflog/converter.hpp"
#include "difflog/oracle.hpp"

// Deterministic synthetic scene generators for the six Kandinsky patterns and
// the CLEVR-Hans3/7 classes, the canonical rule programs they are labeled
// with, concept-example sets for the trainable neural predicates, and noise
// injection.

namespace difflog {

enum class Dataset { kandinsky, clevr };

struct SceneObject {
    std::string shape;
    std::string color;
    std::string size_category;  // clevr: large/small
    std::string material;       // clevr: rubber/metal
    double x = 0.0, y = 0.0, z = 0.0;
    double size = 0.0;  // kandinsky: object diameter in [0.04, 0.12]
};

struct Scene {
    Dataset dataset = Dataset::kandinsky;
    int label = 0;  // kandinsky: 0/1, clevr: class 1..K
    std::vector<SceneObject> objects;
};

// A pattern bundles the language, rule program, background knowledge and
// target atoms used to ground, label, and classify its scenes.
struct PatternSpec {
    std::string name;
    Dataset dataset = Dataset::kandinsky;
    std::size_t objects = 0;  // objects per scene (clevr: maximum)
    std::string language_text;
    std::string rules_text;
    std::string bk_text;
    std::vector<std::string> targets;
};

// twopairs, threepairs, closeby, redtriangle, onlinepair, ninecircles,
// clevr3, clevr7.
const PatternSpec& pattern_spec(const std::string& name);
std::vector<std::string> pattern_names();
std::vector<std::string> kandinsky_pattern_names();

// Crisp facts of one scene under a language: neural predicates evaluated with
// the generator's thresholds (closeby: center distance <= 0.1; online: total
// least-squares residual <= 0.01; leftside x < 0.5 / rightside x > 0.5;
// front: smaller depth coordinate), only for predicates the language declares.
FactSet scene_facts(const Scene& scene, const Language& lang);

BackgroundKnowledge parse_bk(const std::string& text, const Language& lang);

// Oracle-labeled scenes: exactly n_pos positives then n_neg negatives.
// Positives come from pattern-specific proposals, negatives from uniform
// rejection sampling; every label is verified by the exact oracle.
std::vector<Scene> gen_kandinsky(const std::string& pattern, std::size_t n_pos, std::size_t n_neg,
                                 std::uint64_t seed);

// per_class scenes for each class 1..K (variant 3 or 7); scenes satisfying
// more than one class rule are rejected.
std::vector<Scene> gen_clevr_hans(int variant, std::size_t per_class, std::uint64_t seed);

// Packs scenes into the per-dataset layout. Kandinsky object k occupies slot
// k+1 (slot 0 stays empty, matching the obj1-based constant names); clevr
// object k occupies slot k. Padding slots are zero.
ObjectTensor scene_to_tensor(const std::vector<Scene>& scenes, std::size_t max_objects);

// Mixes each one-hot attribute slice with a uniform simplex sample and
// jitters positions by up to epsilon * 0.05; padding slots stay zero.
ObjectTensor add_noise(const ObjectTensor& Z, double epsilon, std::uint64_t seed);

// Concept sets for closeby / online / leftside / rightside / front:
// n_per_class positives (closeby: distance <= 0.1; online: residual <= 0.01;
// leftside: x <= 0.4; rightside: x >= 0.6; front: depth margin 0.1) and as
// many negatives (distance >= 0.2 / residual >= 0.05 / opposite side).
std::vector<ConceptExample> gen_concept_set(const std::string& concept_name, std::size_t n_per_class,
                                            std::uint64_t seed);

std::string write_scenes_jsonl(const std::vector<Scene>& scenes);
std::vector<Scene> read_scenes_jsonl(const std::string& text);

}  // namespace difflog

#endif
