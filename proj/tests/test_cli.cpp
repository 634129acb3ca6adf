#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "bdekit/bitdepth.hpp"
#include "bdekit/brnet.hpp"
#include "bdekit/checkpoint.hpp"
#include "bdekit/png_io.hpp"
#include "bdekit/rng.hpp"
#include "bdekit/training.hpp"

using namespace bdekit;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout and stderr interleaved
};

RunResult run_tool(const std::string& args) {
    const std::string cmd = std::string(BDEKIT_TOOL_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult result;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0)
        result.output.append(buf, n);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
};

ImageBuffer random_image(Rng& rng, int w, int h, int max_bits) {
    ImageBuffer img(w, h, max_bits);
    const int64_t peak = img.max_value();
    for (auto& v : img.data)
        v = static_cast<int32_t>(rng.uniform_int(0, peak));
    return img;
}

ModelConfig tiny_model() {
    ModelConfig cfg;
    cfg.base_filters = 4;
    cfg.opt_steps = {1, 1, 1};
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("cli degrade matches the library and reports the kept bits") {
    TempDir dir("bdekit_cli_degrade");
    Rng rng(701);
    const ImageBuffer original = random_image(rng, 20, 12, 8);
    const fs::path in = dir.path / "in.png", out = dir.path / "out.png";
    encode_png(original, in.string());

    const RunResult r = run_tool("degrade --in " + in.string() + " --out " +
                                 out.string() + " --bits 4");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("kept 4 of 8 bits (missing 4)") != std::string::npos);
    const ImageBuffer got = decode_png(out.string());
    CHECK(got.data == degrade(original, BitSpec{8, 4}).data);
}

TEST_CASE("cli degrade walks directories in order") {
    TempDir dir("bdekit_cli_degrade_dir");
    Rng rng(702);
    fs::create_directories(dir.path / "in");
    for (const char* name : {"x.png", "y.png"})
        encode_png(random_image(rng, 8, 8, 8),
                   (dir.path / "in" / name).string());

    const fs::path out = dir.path / "out";
    const RunResult r = run_tool("degrade --in " + (dir.path / "in").string() +
                                 " --out " + out.string() + " --bits 2");
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out / "x.png"));
    CHECK(fs::exists(out / "y.png"));
    const ImageBuffer x = decode_png((out / "x.png").string());
    CHECK(is_degraded(x, BitSpec{8, 2}));
}

TEST_CASE("cli restore preserves high bits and matches the library") {
    TempDir dir("bdekit_cli_restore");
    const ModelConfig cfg = tiny_model();
    BrNet<float> model(cfg, 77);
    const fs::path ck = dir.path / "model.bdek";
    nn::save_checkpoint(ck.string(), cfg.to_text(), model.params());

    Rng rng(703);
    const BitSpec spec{8, 4};
    const ImageBuffer lbd = degrade(random_image(rng, 16, 12, 8), spec);
    const fs::path in = dir.path / "lbd.png", out = dir.path / "restored.png";
    encode_png(lbd, in.string());

    const RunResult r = run_tool("restore --in " + in.string() + " --out " +
                                 out.string() + " --bits 4 --checkpoint " +
                                 ck.string());
    CHECK(r.exit_code == 0);
    const ImageBuffer got = decode_png(out.string());
    CHECK(high_bits_equal(got, lbd, spec));
    CHECK(got.data == model.restore(lbd, spec).data);

    SUBCASE("weight maps are emitted per channel on request") {
        const RunResult rw = run_tool(
            "restore --in " + in.string() + " --out " + out.string() +
            " --bits 4 --checkpoint " + ck.string() + " --emit-weightmap");
        CHECK(rw.exit_code == 0);
        for (int c = 0; c < 3; ++c) {
            const fs::path wp =
                dir.path / ("restored.w" + std::to_string(c) + ".png");
            REQUIRE(fs::exists(wp));
            const ImageBuffer w = decode_png(wp.string());
            CHECK(w.width == 16);
            CHECK(w.height == 12);
        }
    }
    SUBCASE("corrupt checkpoints exit with an input error") {
        const fs::path broken = dir.path / "broken.bdek";
        std::ofstream(broken, std::ios::binary) << "BDEKITgarbage";
        const RunResult rb = run_tool("restore --in " + in.string() +
                                      " --out " + out.string() +
                                      " --bits 4 --checkpoint " +
                                      broken.string());
        CHECK(rb.exit_code == 1);
    }
}

TEST_CASE("cli train is reproducible per seed") {
    TempDir dir("bdekit_cli_train");
    Rng rng(704);
    fs::create_directories(dir.path / "data");
    encode_png(random_image(rng, 16, 16, 8),
               (dir.path / "data" / "img.png").string());

    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 1;
    tc.patch_size = 8;
    tc.patches_per_epoch = 1;
    tc.checkpoint_every = 1;
    std::ofstream(dir.path / "train.cfg") << tc.to_text();
    std::ofstream(dir.path / "model.cfg") << tiny_model().to_text();

    const auto train_into = [&](const char* sub, const char* seed) {
        const std::string out = (dir.path / sub).string();
        const RunResult r = run_tool(
            "train --config " + (dir.path / "train.cfg").string() +
            " --data " + (dir.path / "data").string() + " --out-dir " + out +
            " --model-config " + (dir.path / "model.cfg").string() +
            " --seed " + seed);
        CAPTURE(r.output);
        REQUIRE(r.exit_code == 0);
        return slurp(fs::path(out) / "final.bdek");
    };
    const std::string a = train_into("run_a", "5");
    const std::string b = train_into("run_b", "5");
    const std::string c = train_into("run_c", "6");
    CHECK(a == b);
    CHECK(a != c);
    CHECK(fs::exists(dir.path / "run_a" / "loss.csv"));
    CHECK(fs::exists(dir.path / "run_a" / "checkpoint-1.bdek"));
}

TEST_CASE("cli evaluate aggregates a baseline run") {
    TempDir dir("bdekit_cli_eval");
    Rng rng(705);
    fs::create_directories(dir.path / "data");
    for (const char* name : {"p.png", "q.png"})
        encode_png(random_image(rng, 16, 16, 8),
                   (dir.path / "data" / name).string());
    const fs::path report = dir.path / "report.csv";

    const RunResult r = run_tool("evaluate --data " +
                                 (dir.path / "data").string() +
                                 " --baseline-zero --bits 4,6 --report " +
                                 report.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("bits_in") != std::string::npos);
    CHECK(r.output.find("bits_missing=4 count=2") != std::string::npos);
    CHECK(r.output.find("bits_missing=2 count=2") != std::string::npos);
    const std::string csv = slurp(report);
    CHECK(csv.starts_with("image,bits_in,bits_missing,psnr_db,ssim,wdis\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

    SUBCASE("restorer source must be exactly one of the two") {
        const std::string base =
            "evaluate --data " + (dir.path / "data").string() + " --bits 4";
        CHECK(run_tool(base).exit_code == 1);
        CHECK(run_tool(base + " --baseline-zero --checkpoint x.bdek")
                  .exit_code == 1);
    }
}

TEST_CASE("cli hist writes matching csvs for identical inputs") {
    TempDir dir("bdekit_cli_hist");
    Rng rng(706);
    const ImageBuffer img = random_image(rng, 10, 10, 8);
    const fs::path a = dir.path / "a.png", b = dir.path / "b.png";
    encode_png(img, a.string());
    encode_png(img, b.string());

    const std::string prefix = (dir.path / "plot").string();
    const RunResult r = run_tool("hist --a " + a.string() + " --b " +
                                 b.string() + " --out " + prefix);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("wdis = 0") != std::string::npos);
    const std::string ca = slurp(prefix + ".a.csv");
    CHECK(ca == slurp(prefix + ".b.csv"));
    CHECK(ca.starts_with("channel,bin,count\n"));

    SUBCASE("depth mismatch is an input error") {
        const fs::path deep = dir.path / "deep.png";
        encode_png(random_image(rng, 10, 10, 16), deep.string());
        const RunResult rm = run_tool("hist --a " + a.string() + " --b " +
                                      deep.string() + " --out " + prefix);
        CHECK(rm.exit_code == 1);
        CHECK(rm.output.find("differ in bit depth") != std::string::npos);
    }
}

TEST_CASE("cli exit codes") {
    CHECK(run_tool("--help").exit_code == 0);
    CHECK(run_tool("").exit_code == 1);           // a subcommand is required
    CHECK(run_tool("degrade --in x").exit_code == 1); // missing options
    TempDir dir("bdekit_cli_codes");
    const RunResult missing =
        run_tool("degrade --in " + (dir.path / "none.png").string() +
                 " --out " + (dir.path / "o.png").string() + " --bits 3");
    CHECK(missing.exit_code == 1);
    const RunResult bad_spec =
        run_tool("degrade --in " + (dir.path / "none.png").string() +
                 " --out " + (dir.path / "o.png").string() + " --bits 9");
    CHECK(bad_spec.exit_code == 1);
}
