#include <doctest.h>

#include <cmath>
#include <set>

#include "difflog/datagen.hpp"

using namespace difflog;

namespace {

// Independent re-labeling of generated scenes through the exact oracle.
bool oracle_label(const Scene& s, const PatternSpec& spec) {
    Language lang = parse_language(spec.language_text);
    auto rules = parse_rules(spec.rules_text, lang);
    BackgroundKnowledge bk = parse_bk(spec.bk_text, lang);
    FactSet facts = scene_facts(s, lang);
    for (const Atom& a : bk.atoms) facts.insert(a);
    Atom kp = parse_ground_atoms("kp(img).", lang)[0];
    return entails(rules, facts, kp, lang);
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("kandinsky generation is oracle-faithful and balanced") {
    for (const std::string& name : kandinsky_pattern_names()) {
        CAPTURE(name);
        const PatternSpec& spec = pattern_spec(name);
        auto scenes = gen_kandinsky(name, 12, 12, 7);
        REQUIRE(scenes.size() == 24);
        std::size_t positives = 0;
        for (const Scene& s : scenes) {
            CHECK(s.objects.size() == spec.objects);
            positives += static_cast<std::size_t>(s.label);
            CHECK(oracle_label(s, spec) == (s.label == 1));
        }
        CHECK(positives == 12);
    }
}

TEST_CASE("nine-circles positives split three ways by color") {
    auto scenes = gen_kandinsky("ninecircles", 10, 0, 3);
    for (const Scene& s : scenes) {
        std::size_t red = 0, yellow = 0, blue = 0;
        for (const SceneObject& o : s.objects) {
            if (o.color == "red") ++red;
            if (o.color == "yellow") ++yellow;
            if (o.color == "blue") ++blue;
        }
        CHECK(red == 3);
        CHECK(yellow == 3);
        CHECK(blue == 3);
    }
}

TEST_CASE("generation is reproducible byte for byte") {
    auto a = gen_kandinsky("twopairs", 8, 8, 42);
    auto b = gen_kandinsky("twopairs", 8, 8, 42);
    CHECK(write_scenes_jsonl(a) == write_scenes_jsonl(b));
    auto c = gen_kandinsky("twopairs", 8, 8, 43);
    CHECK(write_scenes_jsonl(a) != write_scenes_jsonl(c));

    auto d = gen_clevr_hans(3, 4, 42);
    auto e = gen_clevr_hans(3, 4, 42);
    CHECK(write_scenes_jsonl(d) == write_scenes_jsonl(e));
}

TEST_CASE("clevr-hans classes are unambiguous under their rules") {
    for (int variant : {3, 7}) {
        CAPTURE(variant);
        const PatternSpec& spec = pattern_spec(variant == 3 ? "clevr3" : "clevr7");
        Language lang = parse_language(spec.language_text);
        auto rules = parse_rules(spec.rules_text, lang);
        auto scenes = gen_clevr_hans(variant, 3, 11);
        REQUIRE(scenes.size() == static_cast<std::size_t>(3 * variant));

        for (const Scene& s : scenes) {
            FactSet closure = forward_chain(rules, scene_facts(s, lang), lang);
            std::vector<int> classes;
            for (int c = 1; c <= variant; ++c) {
                Atom kp = parse_ground_atoms("kp" + std::to_string(c) + "(img).", lang)[0];
                if (closure.contains(kp)) classes.push_back(c);
            }
            REQUIRE(classes.size() == 1);
            CHECK(classes[0] == s.label);
        }
    }
}

TEST_CASE("clevr class-specific structures are present") {
    auto scenes = gen_clevr_hans(3, 5, 19);
    for (const Scene& s : scenes) {
        if (s.label != 1) continue;
        bool large_cube = false, large_cylinder = false;
        for (const SceneObject& o : s.objects) {
            if (o.size_category == "large" && o.shape == "cube") large_cube = true;
            if (o.size_category == "large" && o.shape == "cylinder") large_cylinder = true;
        }
        CHECK(large_cube);
        CHECK(large_cylinder);
    }

    auto seven = gen_clevr_hans(7, 3, 23);
    for (const Scene& s : seven) {
        if (s.label != 5) continue;
        std::size_t left_spheres = 0;
        for (const SceneObject& o : s.objects)
            if (o.shape == "sphere" && o.x < 0.5) ++left_spheres;
        CHECK(left_spheres >= 3);
    }
}

TEST_CASE("per_class zero yields no scenes") {
    CHECK(gen_clevr_hans(3, 0, 1).empty());
    CHECK(gen_kandinsky("twopairs", 0, 0, 1).empty());
}

TEST_CASE("tensor encoding packs boxes, one-hots and objectness") {
    Scene s;
    s.dataset = Dataset::kandinsky;
    s.objects.push_back(SceneObject{"square", "red", "", "", 0.5, 0.5, 0.0, 0.1});
    ObjectTensor Z = scene_to_tensor({s}, 4);
    REQUIRE(Z.data.shape() == std::vector<std::size_t>{1, 5, 11});

    // slot 0 reserved, object 0 in slot 1
    std::vector<double> expect{0.45, 0.45, 0.55, 0.55, 1, 0, 0, 1, 0, 0, 1};
    for (std::size_t d = 0; d < 11; ++d) {
        CHECK(Z.at(0, 1, d) == doctest::Approx(expect[d]));
        CHECK(Z.at(0, 0, d) == 0.0);  // padding
        CHECK(Z.at(0, 2, d) == 0.0);
    }

    Scene c;
    c.dataset = Dataset::clevr;
    c.objects.push_back(SceneObject{"sphere", "cyan", "large", "metal", 0.2, 0.3, 0.4, 0.0});
    ObjectTensor Zc = scene_to_tensor({c}, 6);
    REQUIRE(Zc.data.shape() == std::vector<std::size_t>{1, 6, 19});
    CHECK(Zc.at(0, 0, 0) == 1.0);   // objectness
    CHECK(Zc.at(0, 0, 1) == doctest::Approx(0.2));
    CHECK(Zc.at(0, 0, 2) == doctest::Approx(0.3));
    CHECK(Zc.at(0, 0, 3) == doctest::Approx(0.4));
    CHECK(Zc.at(0, 0, 4) == 1.0);   // sphere
    CHECK(Zc.at(0, 0, 7) == 1.0);   // large
    CHECK(Zc.at(0, 0, 10) == 1.0);  // metal
    CHECK(Zc.at(0, 0, 11) == 1.0);  // cyan

    Scene big;
    big.dataset = Dataset::kandinsky;
    for (int i = 0; i < 5; ++i) big.objects.push_back(s.objects[0]);
    CHECK_THROWS_AS(scene_to_tensor({big}, 4), ValidationError);
}

TEST_CASE("noise is a convex mixture, zero noise is the identity") {
    auto scenes = gen_kandinsky("twopairs", 5, 5, 3);
    ObjectTensor Z = scene_to_tensor(scenes, 4);

    ObjectTensor same = add_noise(Z, 0.0, 9);
    CHECK(same.data.data() == Z.data.data());

    ObjectTensor noisy = add_noise(Z, 0.1, 9);
    for (std::size_t b = 0; b < Z.batch(); ++b)
        for (std::size_t slot = 0; slot < Z.slots(); ++slot) {
            double objness = Z.at(b, slot, 10);
            CHECK(noisy.at(b, slot, 10) == objness);
            double color_sum = 0.0, shape_sum = 0.0;
            for (int k = 0; k < 3; ++k) {
                color_sum += noisy.at(b, slot, 4 + static_cast<std::size_t>(k));
                shape_sum += noisy.at(b, slot, 7 + static_cast<std::size_t>(k));
            }
            if (objness > 0.0) {
                CHECK(color_sum <= 1.0 + 1e-9);
                CHECK(color_sum >= 0.9 - 1e-9);
                CHECK(shape_sum <= 1.0 + 1e-9);
                CHECK(noisy.at(b, slot, 2) > noisy.at(b, slot, 0));  // box stays a box
                CHECK(noisy.at(b, slot, 3) > noisy.at(b, slot, 1));
            } else {
                // padding slots stay exactly zero
                for (std::size_t d = 0; d < 11; ++d) CHECK(noisy.at(b, slot, d) == 0.0);
            }
        }

    ObjectTensor again = add_noise(Z, 0.1, 9);
    CHECK(again.data.data() == noisy.data.data());
    CHECK_THROWS_AS(add_noise(Z, 1.0, 9), ValidationError);
}

TEST_CASE("concept sets respect their construction thresholds") {
    auto closeby = gen_concept_set("closeby", 50, 3);
    REQUIRE(closeby.size() == 100);
    for (std::size_t i = 0; i < closeby.size(); ++i) {
        const auto& ex = closeby[i];
        CHECK(ex.label == (i < 50 ? 1 : 0));
        double dx = 0.5 * (ex.rows[0][0] + ex.rows[0][2]) - 0.5 * (ex.rows[1][0] + ex.rows[1][2]);
        double dy = 0.5 * (ex.rows[0][1] + ex.rows[0][3]) - 0.5 * (ex.rows[1][1] + ex.rows[1][3]);
        double d = std::hypot(dx, dy);
        if (ex.label) CHECK(d <= 0.1 + 1e-9);
        else CHECK(d >= 0.2 - 1e-9);
    }

    auto online = gen_concept_set("online", 30, 3);
    for (const auto& ex : online) {
        std::vector<std::array<double, 2>> centers;
        for (const auto& row : ex.rows)
            centers.push_back({0.5 * (row[0] + row[2]), 0.5 * (row[1] + row[3])});
        double r = linear_fit_residual(centers);
        if (ex.label) CHECK(r <= 0.01 + 1e-9);
        else CHECK(r >= 0.05 - 1e-9);
    }

    auto front = gen_concept_set("front", 30, 3);
    for (const auto& ex : front) {
        double y1 = ex.rows[0][2], y2 = ex.rows[1][2];
        if (ex.label) CHECK(y1 <= y2 - 0.1 + 1e-9);
        else CHECK(y1 >= y2 + 0.1 - 1e-9);
    }

    CHECK(gen_concept_set("closeby", 0, 1).empty());
    CHECK_THROWS_AS(gen_concept_set("nope", 10, 1), ValidationError);
}

TEST_CASE("scene files round-trip through jsonl") {
    auto scenes = gen_kandinsky("redtriangle", 4, 4, 77);
    std::string text = write_scenes_jsonl(scenes);
    auto back = read_scenes_jsonl(text);
    REQUIRE(back.size() == scenes.size());
    CHECK(write_scenes_jsonl(back) == text);

    auto clevr = gen_clevr_hans(7, 2, 78);
    std::string ctext = write_scenes_jsonl(clevr);
    auto cback = read_scenes_jsonl(ctext);
    CHECK(write_scenes_jsonl(cback) == ctext);
    CHECK(cback[0].objects[0].material == clevr[0].objects[0].material);

    CHECK_THROWS_AS(read_scenes_jsonl("{not json}\n"), ValidationError);
    CHECK_THROWS_AS(read_scenes_jsonl("{\"dataset\":\"mars\",\"label\":0,\"objects\":[]}\n"), ValidationError);
}

TEST_CASE("scene json carries the documented field names") {
    Scene s;
    s.dataset = Dataset::kandinsky;
    s.label = 1;
    s.objects.push_back(SceneObject{"square", "red", "", "", 0.5, 0.5, 0.0, 0.1});
    std::string line = write_scenes_jsonl({s});
    CHECK(line.find("\"dataset\":\"kandinsky\"") != std::string::npos);
    CHECK(line.find("\"label\":1") != std::string::npos);
    CHECK(line.find("\"shape\":\"square\"") != std::string::npos);
    CHECK(line.find("\"color\":\"red\"") != std::string::npos);
    CHECK(line.find("\"x\":0.5") != std::string::npos);
    CHECK(line.find("\"size\":0.1") != std::string::npos);
}

}  // TEST_SUITE
