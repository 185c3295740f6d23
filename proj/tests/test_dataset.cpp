#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "alpeval/dataset.hpp"
#include "alpeval/network.hpp"
#include "alpeval/train.hpp"

using namespace alpeval;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void push_u32_be(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

std::vector<unsigned char> idx_images(std::uint32_t count,
                                      const std::vector<unsigned char>& pixels,
                                      std::uint32_t magic = 0x803) {
    std::vector<unsigned char> v;
    push_u32_be(v, magic);
    push_u32_be(v, count);
    push_u32_be(v, 2);
    push_u32_be(v, 2);
    v.insert(v.end(), pixels.begin(), pixels.end());
    return v;
}

std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& labels,
                                      std::uint32_t magic = 0x801) {
    std::vector<unsigned char> v;
    push_u32_be(v, magic);
    push_u32_be(v, static_cast<std::uint32_t>(labels.size()));
    v.insert(v.end(), labels.begin(), labels.end());
    return v;
}

bool same_examples(const Example& a, const Example& b) {
    return a.label == b.label && a.x.data == b.x.data;
}

}  // namespace

TEST_CASE("blob centers sit on a circle and stay inside the unit box") {
    SECTION("two dimensions, three classes") {
        for (std::size_t cls = 0; cls < 3; ++cls) {
            const Tensor c = blob_center(cls, 2, 3);
            const double angle = 2.0 * std::numbers::pi * double(cls) / 3.0;
            REQUIRE(c[0] == Catch::Approx(0.5 + 0.3 * std::cos(angle)).margin(1e-15));
            REQUIRE(c[1] == Catch::Approx(0.5 + 0.3 * std::sin(angle)).margin(1e-15));
        }
    }
    SECTION("extra dimensions are centered") {
        const Tensor c = blob_center(1, 5, 4);
        for (std::size_t d = 2; d < 5; ++d) REQUIRE(c[d] == 0.5);
    }
    SECTION("one dimension spreads evenly over [0.2, 0.8]") {
        REQUIRE(blob_center(0, 1, 3)[0] == Catch::Approx(0.2).margin(1e-15));
        REQUIRE(blob_center(1, 1, 3)[0] == Catch::Approx(0.5).margin(1e-15));
        REQUIRE(blob_center(2, 1, 3)[0] == Catch::Approx(0.8).margin(1e-15));
    }
    SECTION("all centers lie in [0.2, 0.8]^dim") {
        for (std::size_t k = 2; k <= 6; ++k)
            for (std::size_t cls = 0; cls < k; ++cls)
                for (double v : blob_center(cls, 3, k).data) {
                    REQUIRE(v >= 0.2 - 1e-12);
                    REQUIRE(v <= 0.8 + 1e-12);
                }
    }
}

TEST_CASE("gaussian blobs cluster around their centers") {
    const Dataset ds = gen_gaussian_blobs(20, 2, 3, 0.05, 7);
    REQUIRE(ds.examples.size() == 60);
    REQUIRE(ds.num_classes == 3);
    REQUIRE(ds.dim() == 2);

    SECTION("labels are class-major and counts are balanced") {
        std::vector<std::size_t> counts(3, 0);
        for (const Example& ex : ds.examples) {
            REQUIRE(ex.label < 3);
            ++counts[ex.label];
        }
        for (std::size_t c : counts) REQUIRE(c == 20);
    }
    SECTION("coordinates stay in the unit box even with a huge spread") {
        const Dataset wide = gen_gaussian_blobs(50, 2, 2, 0.8, 3);
        for (const Example& ex : wide.examples)
            for (double v : ex.x.data) {
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1.0);
            }
    }
    SECTION("a tiny spread collapses examples onto the centers") {
        const Dataset tight = gen_gaussian_blobs(10, 2, 3, 1e-4, 5);
        for (const Example& ex : tight.examples) {
            const Tensor c = blob_center(ex.label, 2, 3);
            REQUIRE(std::abs(ex.x[0] - c[0]) < 0.01);
            REQUIRE(std::abs(ex.x[1] - c[1]) < 0.01);
        }
    }
    SECTION("deterministic in the seed") {
        const Dataset again = gen_gaussian_blobs(20, 2, 3, 0.05, 7);
        REQUIRE(again.examples.size() == ds.examples.size());
        for (std::size_t i = 0; i < ds.examples.size(); ++i)
            REQUIRE(same_examples(ds.examples[i], again.examples[i]));
        const Dataset other = gen_gaussian_blobs(20, 2, 3, 0.05, 8);
        bool differs = false;
        for (std::size_t i = 0; i < ds.examples.size(); ++i)
            differs = differs || !same_examples(ds.examples[i], other.examples[i]);
        REQUIRE(differs);
    }
    SECTION("invalid arguments are rejected") {
        REQUIRE_THROWS_AS(gen_gaussian_blobs(0, 2, 3, 0.05, 1), ValidationError);
        REQUIRE_THROWS_AS(gen_gaussian_blobs(5, 0, 3, 0.05, 1), ValidationError);
        REQUIRE_THROWS_AS(gen_gaussian_blobs(5, 2, 1, 0.05, 1), ValidationError);
        REQUIRE_THROWS_AS(gen_gaussian_blobs(5, 2, 3, 0.0, 1), ValidationError);
    }
}

TEST_CASE("noise-free spirals follow the parametric curve exactly") {
    const std::size_t n = 40;
    const Dataset ds = gen_two_spirals(n, 0.0, 11);
    REQUIRE(ds.examples.size() == 2 * n);
    REQUIRE(ds.num_classes == 2);
    for (std::size_t cls = 0; cls < 2; ++cls) {
        const double flip = cls == 0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Example& ex = ds.examples[cls * n + i];
            REQUIRE(ex.label == cls);
            const double t = double(i + 1) / double(n);
            const double angle = t * 2.5 * std::numbers::pi;
            const double r = 0.08 + 0.37 * t;
            REQUIRE(ex.x[0] == 0.5 + flip * r * std::cos(angle));
            REQUIRE(ex.x[1] == 0.5 + flip * r * std::sin(angle));
        }
    }
    SECTION("clean points stay inside [0.05, 0.95]^2") {
        for (const Example& ex : ds.examples)
            for (double v : ex.x.data) {
                REQUIRE(v >= 0.05 - 1e-12);
                REQUIRE(v <= 0.95 + 1e-12);
            }
    }
    SECTION("a single point per class lands at the outer arm end") {
        const Dataset one = gen_two_spirals(1, 0.0, 1);
        REQUIRE(one.examples.size() == 2);
        // t == 1: radius 0.45 at two and a half right angles, i.e. straight up.
        REQUIRE(one.examples[0].x[1] == Catch::Approx(0.95).margin(1e-12));
        REQUIRE(one.examples[1].x[1] == Catch::Approx(0.05).margin(1e-12));
    }
}

TEST_CASE("noisy spirals are deterministic and clamped") {
    const Dataset a = gen_two_spirals(30, 0.05, 2);
    const Dataset b = gen_two_spirals(30, 0.05, 2);
    const Dataset c = gen_two_spirals(30, 0.05, 3);
    bool differs = false;
    for (std::size_t i = 0; i < a.examples.size(); ++i) {
        REQUIRE(same_examples(a.examples[i], b.examples[i]));
        differs = differs || !same_examples(a.examples[i], c.examples[i]);
        for (double v : a.examples[i].x.data) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
    REQUIRE(differs);
    REQUIRE_THROWS_AS(gen_two_spirals(0, 0.0, 1), ValidationError);
    REQUIRE_THROWS_AS(gen_two_spirals(5, -0.1, 1), ValidationError);
}

TEST_CASE("spirals defeat a linear classifier") {
    const Dataset ds = gen_two_spirals(100, 0.02, 1);
    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.learning_rate = 0.5;
    cfg.batch_size = 32;
    cfg.seed = 1;
    const TrainRun run = train_natural(ModelSpec{2, {}, 2}, ds, cfg);
    std::size_t correct = 0;
    for (const Example& ex : ds.examples)
        if (predict(run.params, ex.x) == ex.label) ++correct;
    REQUIRE(double(correct) / double(ds.examples.size()) < 0.70);
}

TEST_CASE("idx pairs load with exact pixel scaling") {
    const auto img_path = temp_file("alpeval_test_images.idx");
    const auto lbl_path = temp_file("alpeval_test_labels.idx");
    write_bytes(img_path, idx_images(2, {0, 255, 128, 64, 1, 2, 3, 4}));
    write_bytes(lbl_path, idx_labels({1, 0}));

    const Dataset ds = load_idx(img_path, lbl_path);
    REQUIRE(ds.examples.size() == 2);
    REQUIRE(ds.dim() == 4);
    REQUIRE(ds.num_classes == 2);
    REQUIRE(ds.examples[0].label == 1);
    REQUIRE(ds.examples[1].label == 0);
    const std::vector<double> expect0{0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0};
    const std::vector<double> expect1{1.0 / 255.0, 2.0 / 255.0, 3.0 / 255.0, 4.0 / 255.0};
    REQUIRE(ds.examples[0].x.data == expect0);
    REQUIRE(ds.examples[1].x.data == expect1);

    SECTION("all-zero labels still yield two classes") {
        write_bytes(lbl_path, idx_labels({0, 0}));
        REQUIRE(load_idx(img_path, lbl_path).num_classes == 2);
    }
    SECTION("bad magic values are distinct errors") {
        write_bytes(img_path, idx_images(2, {0, 0, 0, 0, 0, 0, 0, 0}, 0x804));
        REQUIRE_THROWS_MATCHES(load_idx(img_path, lbl_path), IoError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("bad magic")));
        write_bytes(img_path, idx_images(2, {0, 0, 0, 0, 0, 0, 0, 0}));
        write_bytes(lbl_path, idx_labels({1, 0}, 0x802));
        REQUIRE_THROWS_MATCHES(load_idx(img_path, lbl_path), IoError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("bad magic")));
    }
    SECTION("truncated pixel payload is reported") {
        write_bytes(img_path, idx_images(2, {0, 255, 128}));
        write_bytes(lbl_path, idx_labels({1, 0}));
        REQUIRE_THROWS_MATCHES(load_idx(img_path, lbl_path), IoError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("truncated")));
    }
    SECTION("image and label counts must agree") {
        write_bytes(img_path, idx_images(2, {0, 255, 128, 64, 1, 2, 3, 4}));
        write_bytes(lbl_path, idx_labels({1, 0, 1}));
        REQUIRE_THROWS_MATCHES(load_idx(img_path, lbl_path), IoError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("mismatch")));
    }
    SECTION("missing file is an io error") {
        REQUIRE_THROWS_AS(load_idx(temp_file("alpeval_test_nonexistent.idx"), lbl_path),
                          IoError);
    }
    std::filesystem::remove(img_path);
    std::filesystem::remove(lbl_path);
}

TEST_CASE("split partitions the dataset without losing examples") {
    const Dataset ds = gen_gaussian_blobs(5, 2, 2, 0.05, 9);
    const auto [train, test] = split(ds, 0.5, 4);
    REQUIRE(train.examples.size() == 5);
    REQUIRE(test.examples.size() == 5);
    REQUIRE(train.num_classes == 2);
    REQUIRE(test.num_classes == 2);
    REQUIRE(train.name == ds.name + "/train");
    REQUIRE(test.name == ds.name + "/test");

    SECTION("union is a permutation of the input") {
        auto key = [](const Example& ex) {
            return std::make_tuple(ex.label, ex.x[0], ex.x[1]);
        };
        std::vector<std::tuple<std::size_t, double, double>> all, combined;
        for (const Example& ex : ds.examples) all.push_back(key(ex));
        for (const Example& ex : train.examples) combined.push_back(key(ex));
        for (const Example& ex : test.examples) combined.push_back(key(ex));
        std::sort(all.begin(), all.end());
        std::sort(combined.begin(), combined.end());
        REQUIRE(all == combined);
    }
    SECTION("deterministic in the seed") {
        const auto [train2, test2] = split(ds, 0.5, 4);
        for (std::size_t i = 0; i < train.examples.size(); ++i)
            REQUIRE(same_examples(train.examples[i], train2.examples[i]));
        for (std::size_t i = 0; i < test.examples.size(); ++i)
            REQUIRE(same_examples(test.examples[i], test2.examples[i]));
    }
    SECTION("rounded counts follow the fraction") {
        const auto [t8, t2] = split(ds, 0.8, 1);
        REQUIRE(t8.examples.size() == 8);
        REQUIRE(t2.examples.size() == 2);
    }
    SECTION("degenerate fractions are rejected") {
        REQUIRE_THROWS_AS(split(ds, 0.0, 1), ValidationError);
        REQUIRE_THROWS_AS(split(ds, 1.0, 1), ValidationError);
        REQUIRE_THROWS_AS(split(ds, -0.2, 1), ValidationError);
    }
}

TEST_CASE("dataset csv export uses full-precision coordinates") {
    Dataset ds;
    ds.num_classes = 2;
    ds.name = "golden";
    ds.examples.push_back(Example{Tensor::row({0.5, 0.25}), 1});
    ds.examples.push_back(Example{Tensor::row({1.0, 0.125}), 0});
    const auto path = temp_file("alpeval_test_dataset.csv");
    write_dataset_csv(ds, path);
    std::ifstream in(path);
    const std::string text(std::istreambuf_iterator<char>(in), {});
    REQUIRE(text == "label,x0,x1\n1,0.5,0.25\n0,1,0.125\n");
    std::filesystem::remove(path);
}
