#include <doctest.h>

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli/commands.hpp"
#include "mothscan/image_io.hpp"
#include "mothscan/parts.hpp"
#include "support/synthetic.hpp"

using namespace mothscan;
using namespace mothscan::cli;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("mothscan_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

GrayImage two_blob_image() {
    GrayImage img(240, 160, 255.0);
    testing::paint_rect(img, Box{40, 60, 20, 20}, 0.0);
    testing::paint_rect(img, Box{160, 60, 20, 20}, 0.0);
    return img;
}

/// Runs the built binary (MOTHSCAN_BIN overrides); returns its exit status.
int run_binary(const std::string& args) {
    const char* env = std::getenv("MOTHSCAN_BIN");
    const char* bin = env ? env : MOTHSCAN_BIN_DEFAULT;
    const std::string cmd = std::string("\"") + bin + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("detect command") {
    TempDir dir("detect");
    write_image(dir / "pair.png", AnyImage(two_blob_image()));
    write_image(dir / "blank.png", AnyImage(GrayImage(64, 64, 255.0)));

    SUBCASE("two blobs and a blank image") {
        CHECK(run_detect({{dir / "pair.png", dir / "blank.png"}, std::nullopt, dir / "out.json"}) == kOk);
        const AnnotationFile out = load_annotations(dir / "out.json");
        REQUIRE(out.images.size() == 2);
        CHECK(out.images[0].image_id == "pair");
        CHECK(out.images[1].image_id == "blank");
        int pair = 0, blank = 0;
        for (const auto& b : out.boxes) {
            REQUIRE(b.score.has_value());
            (b.image_id == "pair" ? pair : blank)++;
        }
        CHECK(pair == 2);
        CHECK(blank == 0);
    }
    SUBCASE("output is byte-identical across runs") {
        CHECK(run_detect({{dir / "pair.png"}, std::nullopt, dir / "a.json"}) == kOk);
        CHECK(run_detect({{dir / "pair.png"}, std::nullopt, dir / "b.json"}) == kOk);
        CHECK(read_text(dir / "a.json") == read_text(dir / "b.json"));
    }
    SUBCASE("missing config leaves no output") {
        CHECK(run_detect({{dir / "pair.png"}, dir / "nope.json", dir / "out.json"}) == kInputError);
        CHECK_FALSE(fs::exists(dir / "out.json"));
    }
    SUBCASE("invalid config") {
        write_text(dir / "bad.json", R"({"blur_radius": -1})");
        CHECK(run_detect({{dir / "pair.png"}, dir / "bad.json", dir / "out.json"}) == kInputError);
        CHECK_FALSE(fs::exists(dir / "out.json"));
    }
    SUBCASE("undecodable input") {
        write_text(dir / "junk.png", "not an image");
        CHECK(run_detect({{dir / "junk.png", dir / "pair.png"}, std::nullopt, dir / "out.json"}) == kInputError);
        CHECK_FALSE(fs::exists(dir / "out.json"));
        CHECK(run_detect({{dir / "junk.png", dir / "pair.png"}, std::nullopt, dir / "out.json", true}) == kInputError);
        REQUIRE(fs::exists(dir / "out.json"));
        CHECK(load_annotations(dir / "out.json").images.size() == 1);
    }
    SUBCASE("binary exit codes") {
        CHECK(run_binary("detect " + (dir / "pair.png").string() + " --out " + (dir / "bin.json").string()) == 0);
        CHECK(run_binary("detect " + (dir / "pair.png").string() + " --config " + (dir / "nope.json").string() +
                         " --out " + (dir / "x.json").string()) == 1);
        CHECK(run_binary("detect") == 1);
        CHECK(run_binary("frobnicate") == 1);
    }
}

TEST_CASE("eval command") {
    TempDir dir("eval");
    const fs::path gt = fs::path(MOTHSCAN_FIXTURE_DIR) / "eu_moths_sample.json";
    AnnotationFile pred = load_annotations(gt);
    for (auto& b : pred.boxes) b.score = 1.0;
    save_annotations(dir / "pred.json", pred);

    std::ostringstream table;
    CHECK(run_eval({dir / "pred.json", gt, {0.50, 0.75}, dir / "report.json", dir / "pr.csv"}, table) == kOk);
    const json report = json::parse(read_text(dir / "report.json"));
    CHECK(report["ap"].size() == 2);
    CHECK(report["ap"]["0.50"] == 1.0);
    CHECK(report["ap"]["0.75"] == 1.0);
    CHECK(table.str().find("mAP@0.50") != std::string::npos);
    CHECK(fs::exists(dir / "pr.csv"));

    SUBCASE("toy predictions match the library") {
        pred.boxes[0].box.x += 40;
        pred.boxes[1].score = 0.3;
        pred.boxes[3].box.w /= 2;
        save_annotations(dir / "pred2.json", pred);
        std::ostringstream t2;
        CHECK(run_eval({dir / "pred2.json", gt, {0.50, 0.75}, dir / "r2.json", std::nullopt}, t2) == kOk);
        const EvalReport expect = map_at(to_predictions(pred), to_ground_truth(load_annotations(gt)), {0.5, 0.75});
        const json r2 = json::parse(read_text(dir / "r2.json"));
        CHECK(r2["ap"]["0.50"].get<double>() == expect.ap_at(0.5));
        CHECK(r2["ap"]["0.75"].get<double>() == expect.ap_at(0.75));
        CHECK(expect.ap_at(0.75) < 1.0);
    }
    SUBCASE("unknown image id") {
        pred.images.push_back({"stranger", "s.png", 10, 10, std::nullopt, std::nullopt});
        pred.boxes.push_back({"stranger", Box{0, 0, 2, 2}, std::nullopt, 0.5});
        save_annotations(dir / "pred3.json", pred);
        std::ostringstream t3;
        CHECK(run_eval({dir / "pred3.json", gt, {0.5}, std::nullopt, std::nullopt}, t3) == kInputError);
    }
    SUBCASE("binary default thresholds") {
        CHECK(run_binary("eval --pred " + (dir / "pred.json").string() + " --gt " + gt.string() + " --out " +
                         (dir / "bin.json").string()) == 0);
        const json r = json::parse(read_text(dir / "bin.json"));
        CHECK(r["ap"].size() == 2);
        CHECK(r["ap"].contains("0.50"));
        CHECK(r["ap"].contains("0.75"));
    }
}

TEST_CASE("tune command") {
    TempDir dir("tune");
    testing::SceneParams p;
    p.width = 256;
    p.height = 256;
    p.min_count = 2;
    p.max_count = 4;
    AnnotationFile gt;
    for (int i = 0; i < 3; ++i) {
        const auto scene = testing::make_scene(500 + i, p);
        const std::string name = "scene" + std::to_string(i) + ".png";
        write_image(dir / name, AnyImage(scene.image));
        gt.images.push_back({"scene" + std::to_string(i), name, 256, 256, std::nullopt, std::nullopt});
        for (const Box& b : scene.truth) gt.boxes.push_back({"scene" + std::to_string(i), b, std::nullopt, std::nullopt});
    }
    save_annotations(dir / "gt.json", gt);

    SUBCASE("single-point grid") {
        write_text(dir / "grid.json", R"({"objective": "map@0.50", "grid": {"blur_radius": [2]}})");
        CHECK(run_tune({dir.path, dir / "gt.json", dir / "grid.json", std::nullopt, dir / "best.json"}) == kOk);
        DetectorConfig expect;
        expect.blur_radius = 2;
        CHECK(config_from_json(read_text(dir / "best.json")) == expect);
        const auto board = lines_of(dir / "best.leaderboard.csv");
        REQUIRE(board.size() == 2);
    }
    SUBCASE("2x2 grid matches independent re-evaluation") {
        write_text(dir / "grid.json",
                   R"({"objective": "map@0.75", "grid": {"blur_radius": [1, 4], "threshold_method": ["global_mean", "otsu"], "morph_open_radius": [0], "min_area": [20]}})");
        CHECK(run_tune({dir.path, dir / "gt.json", dir / "grid.json", std::nullopt, dir / "best.json",
                        dir / "board.csv", 2}) == kOk);

        std::vector<GrayImage> images;
        for (const auto& rec : gt.images) images.push_back(as_gray(read_image(dir / rec.file_path)));
        double best_score = -1.0;
        DetectorConfig best;
        std::vector<double> scores;
        for (int blur : {1, 4})
            for (ThresholdMethod m : {ThresholdMethod::global_mean, ThresholdMethod::otsu}) {
                DetectorConfig c;
                c.blur_radius = blur;
                c.threshold_method = m;
                c.morph_open_radius = 0;
                c.min_area = 20;
                std::vector<ImagePredictions> preds;
                for (std::size_t i = 0; i < images.size(); ++i)
                    preds.push_back({gt.images[i].image_id, detect(images[i], c)});
                const double s = map_at(preds, to_ground_truth(gt), {0.75}).ap_at(0.75);
                scores.push_back(s);
                if (s > best_score) {
                    best_score = s;
                    best = c;
                }
            }
        CHECK(config_from_json(read_text(dir / "best.json")) == best);
        const auto board = lines_of(dir / "board.csv");
        REQUIRE(board.size() == 5);
        for (std::size_t i = 0; i < 4; ++i) {
            const std::string last = board[i + 1].substr(board[i + 1].rfind(',') + 1);
            CHECK(std::stod(last) == doctest::Approx(scores[i]).epsilon(1e-15));
        }
        // parallel and sequential agree
        TuneGrid grid = tune_grid_from_json(read_text(dir / "grid.json"));
        const auto seq = tune_detector(images, to_ground_truth(gt), grid, 1);
        const auto par = tune_detector(images, to_ground_truth(gt), grid, 3);
        CHECK(leaderboard_csv(seq) == leaderboard_csv(par));
    }
    SUBCASE("unsupported metric") {
        write_text(dir / "grid.json", R"({"grid": {"blur_radius": [2]}})");
        CHECK(run_tune({dir.path, dir / "gt.json", dir / "grid.json", std::string("map@0.9"), dir / "best.json"}) ==
              kInputError);
        CHECK_FALSE(fs::exists(dir / "best.json"));
        CHECK_THROWS_AS(objective_threshold("map@0.9"), ParameterError);
    }
    SUBCASE("empty ground truth") {
        save_annotations(dir / "empty.json", AnnotationFile{});
        write_text(dir / "grid.json", R"({"grid": {"blur_radius": [2]}})");
        CHECK(run_tune({dir.path, dir / "empty.json", dir / "grid.json", std::nullopt, dir / "best.json"}) ==
              kInputError);
    }
    SUBCASE("grid parsing") {
        CHECK_THROWS_AS(tune_grid_from_json(R"({"grid": {}})"), ValidationError);
        CHECK_THROWS_AS(tune_grid_from_json(R"({"grid": {"blur": [1]}})"), ParseError);
        CHECK_THROWS_AS(tune_grid_from_json(R"({"grid": {"blur_radius": []}})"), ParseError);
        const TuneGrid g = tune_grid_from_json(R"({"grid": {"blur_radius": [1, 2], "min_area": [5, 6, 7]}})");
        const auto configs = g.expand();
        REQUIRE(configs.size() == 6);
        CHECK(configs[0].blur_radius == 1);
        CHECK(configs[1].min_area == 6);
        CHECK(configs[3].blur_radius == 2);
    }
}

TEST_CASE("parts command") {
    TempDir dir("parts");
    const auto blobs = testing::gaussian_blobs(80, 60, {{20.0, 20.0}, {60.0, 40.0}}, 7.0);
    write_float_raster(dir / "sal.bin", blobs.values);
    write_image(dir / "img.png", AnyImage(ColorImage(80, 60, Rgb{90, 120, 30})));

    PartsOptions opt;
    opt.image = dir / "img.png";
    opt.k = 2;
    opt.out = dir / "parts.json";

    SUBCASE("two blobs give two parts") {
        opt.saliency = dir / "sal.bin";
        CHECK(run_parts(opt) == kOk);
        CHECK(json::parse(read_text(opt.out))["parts"].size() == 2);
    }
    SUBCASE("gradient maps with dimension selection") {
        GrayImage neg = blobs.values;
        for (double& v : neg.pixels()) v = -v;
        save_gradient_maps(dir / "grads", GradientMapSet({0, 1, 2}, {blobs.values, neg, GrayImage(80, 60, 0.0)}));
        write_text(dir / "w.json", R"({"classes": 1, "dim": 3, "weights": [0.9, -1.2, 0.01]})");
        opt.gradmaps = dir / "grads";
        opt.weights = dir / "w.json";
        opt.weight_threshold = 0.5;
        CHECK(run_parts(opt) == kOk);
        CHECK(json::parse(read_text(opt.out))["parts"].size() == 2);
    }
    SUBCASE("all-zero saliency") {
        write_float_raster(dir / "zero.bin", GrayImage(80, 60, 0.0));
        opt.saliency = dir / "zero.bin";
        CHECK(run_parts(opt) == kOk);
        CHECK(json::parse(read_text(opt.out))["parts"].empty());
    }
    SUBCASE("size mismatch and flag misuse") {
        write_float_raster(dir / "small.bin", GrayImage(40, 60, 1.0));
        opt.saliency = dir / "small.bin";
        CHECK(run_parts(opt) == kInputError);
        opt.gradmaps = dir.path;
        CHECK(run_parts(opt) == kInputError);
        opt.gradmaps.reset();
        opt.saliency.reset();
        CHECK(run_parts(opt) == kInputError);
        CHECK(run_binary("parts --gradmaps " + dir.path.string() + " --saliency " + (dir / "sal.bin").string() +
                         " --image " + (dir / "img.png").string() + " --out " + (dir / "p.json").string()) == 1);
    }
}

TEST_CASE("watch command") {
    TempDir in("watch_in");
    TempDir out("watch_out");
    WatchOptions opt;
    opt.in = in.path;
    opt.out = out.path;
    opt.max_cycles = 1;
    opt.interval_seconds = 0.0;
    const std::atomic<bool> stop{false};

    SUBCASE("empty directory") {
        CHECK(run_watch(opt, stop) == kOk);
        CHECK_FALSE(fs::exists(out / kManifestName));
        CHECK(fs::is_empty(out.path));
    }
    SUBCASE("one two-blob image") {
        write_image(in / "frame01.png", AnyImage(two_blob_image()));
        CHECK(run_watch(opt, stop) == kOk);
        CHECK(fs::exists(out / "frame01_0.png"));
        CHECK(fs::exists(out / "frame01_1.png"));
        const auto lines = lines_of(out / kManifestName);
        REQUIRE(lines.size() == 1);
        const json entry = json::parse(lines[0]);
        CHECK(entry["source_image"] == "frame01.png");
        CHECK(entry["detections"].size() == 2);
        CHECK(entry.contains("timestamp"));

        // crop is the padded box
        const json& d0 = entry["detections"][0];
        const GrayImage crop0 = as_gray(read_image(out / d0["crop_path"].get<std::string>()));
        CHECK(crop0.width() == d0["crop_box"]["w"].get<int>());
        CHECK(d0["crop_box"]["w"].get<int>() == d0["box"]["w"].get<int>() + 2 * opt.margin);

        SUBCASE("re-running adds nothing") {
            opt.max_cycles = 3;
            CHECK(run_watch(opt, stop) == kOk);
            CHECK(lines_of(out / kManifestName).size() == 1);
        }
        SUBCASE("new files are picked up once") {
            write_image(in / "frame02.png", AnyImage(GrayImage(50, 50, 255.0)));
            CHECK(watch_cycle(opt, DetectorConfig{}) == 1);
            CHECK(watch_cycle(opt, DetectorConfig{}) == 0);
            const auto all = lines_of(out / kManifestName);
            REQUIRE(all.size() == 2);
            CHECK(json::parse(all[1])["detections"].empty());
            CHECK(manifest_sources(out.path) == std::vector<std::string>{"frame01.png", "frame02.png"});
        }
    }
    SUBCASE("undecodable file is recorded once with an error") {
        write_text(in / "broken.png", "garbage");
        CHECK(run_watch(opt, stop) == kOk);
        CHECK(run_watch(opt, stop) == kOk);
        const auto lines = lines_of(out / kManifestName);
        REQUIRE(lines.size() == 1);
        CHECK(json::parse(lines[0]).contains("error"));
    }
    SUBCASE("matches batch detect") {
        testing::SceneParams p;
        p.width = 300;
        p.height = 300;
        p.min_count = 2;
        p.max_count = 5;
        std::vector<fs::path> files;
        for (int i = 0; i < 3; ++i) {
            files.push_back(in / ("s" + std::to_string(i) + ".png"));
            write_image(files.back(), AnyImage(testing::make_scene(40 + i, p).image));
        }
        CHECK(run_watch(opt, stop) == kOk);
        TempDir batch("watch_batch");
        CHECK(run_detect({files, std::nullopt, batch / "det.json"}) == kOk);
        const AnnotationFile det = load_annotations(batch / "det.json");

        const auto lines = lines_of(out / kManifestName);
        REQUIRE(lines.size() == 3);
        for (const auto& line : lines) {
            const json entry = json::parse(line);
            const std::string id = fs::path(entry["source_image"].get<std::string>()).stem().string();
            std::vector<std::pair<Box, double>> from_watch, from_batch;
            for (const auto& d : entry["detections"])
                from_watch.emplace_back(Box{d["box"]["x"], d["box"]["y"], d["box"]["w"], d["box"]["h"]},
                                        d["score"].get<double>());
            for (const auto& b : det.boxes)
                if (b.image_id == id) from_batch.emplace_back(b.box, *b.score);
            CHECK(from_watch == from_batch);
        }
    }
    SUBCASE("same directory for input and output") {
        opt.out = opt.in;
        CHECK(run_watch(opt, stop) == kInputError);
    }
}

TEST_CASE("stats and fuse commands") {
    std::ostringstream table;
    CHECK(run_stats({fs::path(MOTHSCAN_FIXTURE_DIR) / "nid_sample.json"}, table) == kOk);
    CHECK(table.str().find("55") != std::string::npos);
    std::ostringstream js;
    CHECK(run_stats({fs::path(MOTHSCAN_FIXTURE_DIR) / "eu_moths_sample.json", true}, js) == kOk);
    CHECK(json::parse(js.str())["n_species"] == 5);

    TempDir dir("fuse");
    write_text(dir / "p.json", "[0.8, 0.2]");
    write_text(dir / "q.json", "[0.5, 0.5]");
    std::ostringstream fused;
    CHECK(run_fuse({dir / "p.json", dir / "q.json"}, fused) == kOk);
    const auto r = json::parse(fused.str());
    CHECK(r[0].get<double>() == doctest::Approx(2.0 / 3.0));
    write_text(dir / "bad.json", "[0.8, 0.8]");
    std::ostringstream none;
    CHECK(run_fuse({dir / "p.json", dir / "bad.json"}, none) == kInputError);
}
