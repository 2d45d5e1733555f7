#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flexac/actstore.hpp"
#include "support/helpers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int status = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Workspace {
public:
    Workspace() : dir_(flexac::testing::scratch_dir("cli")) {}
    ~Workspace() { fs::remove_all(dir_); }

    fs::path operator/(const std::string& name) const { return dir_ / name; }

    Run flexac(const std::string& args) const {
        const fs::path out = dir_ / "stdout.txt";
        const fs::path err = dir_ / "stderr.txt";
        const std::string cmd = std::string("\"") + FLEXAC_EXE + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                                err.string() + "\"";
        const int raw = std::system(cmd.c_str());
        Run r;
        r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

private:
    fs::path dir_;
};

std::vector<std::vector<float>> captures_at(const fs::path& file, std::size_t layer) {
    std::vector<std::vector<float>> rows;
    std::istringstream in(slurp(file));
    for (std::string line; std::getline(in, line);) {
        const json j = json::parse(line);
        if (j["layer"].get<std::size_t>() == layer) rows.push_back(j["values"].get<std::vector<float>>());
    }
    return rows;
}

std::size_t line_count(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("fixture pipeline: profile, build-vector, steer alignment") {
    Workspace ws;
    REQUIRE(ws.flexac("make-fixture --seed 3 --out " + ws.path("fx")).status == 0);
    for (const char* f : {"model.toym", "activations.actv", "task.actv", "pairs.jsonl", "run_config.json"}) {
        CHECK(fs::exists(ws / "fx" / f));
    }

    const std::string before = slurp(ws / "fx/activations.actv");
    REQUIRE(ws.flexac("profile --activations " + ws.path("fx/activations.actv") + " --out " + ws.path("prof")).status == 0);
    CHECK(line_count(slurp(ws / "prof/profile.jsonl")) == 8);
    CHECK(fs::exists(ws / "prof/run_config.json"));
    CHECK(slurp(ws / "fx/activations.actv") == before);

    REQUIRE(ws.flexac("build-vector --activations " + ws.path("fx/activations.actv") +
                      " --layers 7 --K 50 --out " + ws.path("gen.strv"))
                .status == 0);
    const flexac::SteeringVectorSet v = flexac::load_vectors(ws.path("gen.strv"));
    REQUIRE(v.layer_indices == std::vector<std::uint32_t>{7});
    CHECK(v.meta.k == 50u);

    const std::string steer = "steer --model " + ws.path("fx/model.toym") + " --gen " + ws.path("gen.strv") +
                              " --prompt 1,2,3,4 --steps 3";
    REQUIRE(ws.flexac(steer + " --alpha-gen 1 --out " + ws.path("s_pos")).status == 0);
    REQUIRE(ws.flexac(steer + " --alpha-gen 0 --out " + ws.path("s_zero")).status == 0);
    const auto pos = captures_at(ws / "s_pos/captures.jsonl", 7);
    const auto zero = captures_at(ws / "s_zero/captures.jsonl", 7);
    REQUIRE(pos.size() >= 4);
    for (std::size_t p = 0; p < 4; ++p) {
        CHECK(flexac::cosine_similarity(pos[p], v.vectors[0]) >= flexac::cosine_similarity(zero[p], v.vectors[0]));
    }
    CHECK(line_count(slurp(ws / "s_pos/trace.jsonl")) > 0);
    CHECK(slurp(ws / "s_zero/trace.jsonl").empty());
}

TEST_CASE("zero coefficients match steering omitted entirely") {
    Workspace ws;
    REQUIRE(ws.flexac("make-fixture --seed 9 --num-pairs 40 --out " + ws.path("fx")).status == 0);
    REQUIRE(ws.flexac("build-vector --activations " + ws.path("fx/activations.actv") + " --layers 2,5 --out " +
                      ws.path("gen.strv"))
                .status == 0);
    REQUIRE(ws.flexac("build-vector --kind task --activations " + ws.path("fx/task.actv") + " --layers 2,5 --out " +
                      ws.path("task.strv"))
                .status == 0);
    const std::string base = "steer --model " + ws.path("fx/model.toym") + " --prompt 0,5,9 --steps 6";
    REQUIRE(ws.flexac(base + " --gen " + ws.path("gen.strv") + " --task " + ws.path("task.strv") +
                      " --alpha-gen 0 --alpha-task 0 --sic --renorm --out " + ws.path("a"))
                .status == 0);
    REQUIRE(ws.flexac(base + " --out " + ws.path("b")).status == 0);
    const json a = json::parse(slurp(ws / "a/tokens.json"));
    const json b = json::parse(slurp(ws / "b/tokens.json"));
    CHECK(a["tokens"] == b["tokens"]);
    CHECK(a["generated"].size() == 6);
}

TEST_CASE("random vectors are reproducible per seed") {
    Workspace ws;
    const std::string args = "build-vector --kind random --seed 7 --dim 16 --layers 1,3 --target-norm 2 --out ";
    REQUIRE(ws.flexac(args + ws.path("r1.strv")).status == 0);
    REQUIRE(ws.flexac(args + ws.path("r2.strv")).status == 0);
    CHECK(slurp(ws / "r1.strv") == slurp(ws / "r2.strv"));
    REQUIRE(ws.flexac("build-vector --kind random --seed 8 --dim 16 --layers 1,3 --out " + ws.path("r3.strv")).status == 0);
    CHECK(slurp(ws / "r1.strv") != slurp(ws / "r3.strv"));
}

TEST_CASE("rerunning from a snapshot reproduces outputs") {
    Workspace ws;
    REQUIRE(ws.flexac("make-fixture --seed 4 --num-pairs 30 --out " + ws.path("fx")).status == 0);
    REQUIRE(ws.flexac("intervene --model " + ws.path("fx/model.toym") + " --pairs " + ws.path("fx/pairs.jsonl") +
                      " --metric euclidean --out " + ws.path("iv1"))
                .status == 0);
    REQUIRE(ws.flexac("intervene --config " + ws.path("iv1/run_config.json") + " --out " + ws.path("iv2")).status == 0);
    CHECK(slurp(ws / "iv1/intervention.jsonl") == slurp(ws / "iv2/intervention.jsonl"));
    CHECK(slurp(ws / "iv1/intervention.csv") == slurp(ws / "iv2/intervention.csv"));
    CHECK(line_count(slurp(ws / "iv1/intervention.jsonl")) == 8);
    const json first = json::parse(slurp(ws / "iv1/intervention.jsonl").substr(0, slurp(ws / "iv1/intervention.jsonl").find('\n')));
    for (const char* key : {"layer", "d_L", "d_bar", "baseline"}) CHECK(first.contains(key));

    REQUIRE(ws.flexac("build-vector --activations " + ws.path("fx/activations.actv") + " --layers 3 --K 5 --out " +
                      ws.path("g1.strv"))
                .status == 0);
    REQUIRE(ws.flexac("build-vector --config " + ws.path("g1.strv.config.json") + " --out " + ws.path("g2.strv")).status == 0);
    CHECK(slurp(ws / "g1.strv") == slurp(ws / "g2.strv"));

    const std::string steer = "steer --model " + ws.path("fx/model.toym") + " --gen " + ws.path("g1.strv") +
                              " --alpha-gen -1 --sic --renorm --prompt 2,4 --steps 4 --out ";
    REQUIRE(ws.flexac(steer + ws.path("st1")).status == 0);
    REQUIRE(ws.flexac("steer --config " + ws.path("st1/run_config.json") + " --out " + ws.path("st2")).status == 0);
    for (const char* f : {"tokens.json", "trace.jsonl", "captures.jsonl"}) {
        CHECK(slurp(ws / "st1" / f) == slurp(ws / "st2" / f));
    }
}

TEST_CASE("metric commands") {
    Workspace ws;
    {
        std::ofstream(ws / "ann.jsonl") << R"({"mentioned":["a","b","c"],"gt":["a"]})" << "\n";
        std::ofstream(ws / "qa.jsonl") << R"({"pred":"yes","label":"yes"})" "\n"
                                       << R"({"pred":"yes","label":"yes"})" "\n"
                                       << R"({"pred":"yes","label":"no"})" "\n"
                                       << R"({"pred":"no","label":"yes"})" "\n"
                                       << R"({"pred":"no","label":"no"})" "\n";
        flexac::EmbeddingSet e{flexac::FeatureVector{0, 0, 1}, {flexac::FeatureVector{1, 0, 0}, flexac::FeatureVector{0, 1, 0}},
                               {"owl", "anchor"}};
        std::ofstream out(ws / "emb.embv", std::ios::binary);
        flexac::write_embeddings(e, out);
    }
    Run r = ws.flexac("chair --annotations " + ws.path("ann.jsonl") + " --out " + ws.path("chair"));
    REQUIRE(r.status == 0);
    json j = json::parse(r.out);
    CHECK(j["CHAIR_S"].get<double>() == doctest::Approx(2.0 / 3.0));
    CHECK(j["CHAIR_I"].get<double>() == 1.0);
    CHECK(fs::exists(ws / "chair/chair.json"));

    r = ws.flexac("pope --qa " + ws.path("qa.jsonl"));
    REQUIRE(r.status == 0);
    j = json::parse(r.out);
    CHECK(j["accuracy"].get<double>() == doctest::Approx(0.6));
    CHECK(j["f1"].get<double>() == doctest::Approx(2.0 / 3.0));

    r = ws.flexac("vdat --embeddings " + ws.path("emb.embv"));
    REQUIRE(r.status == 0);
    CHECK(json::parse(r.out)["vdat"].get<double>() == 100.0);
}

TEST_CASE("pca command") {
    Workspace ws;
    REQUIRE(ws.flexac("make-fixture --seed 2 --num-pairs 20 --out " + ws.path("fx")).status == 0);
    REQUIRE(ws.flexac("pca --activations " + ws.path("fx/activations.actv") + " --layer 6 --k 3 --out " +
                      ws.path("pca.csv"))
                .status == 0);
    const std::string csv = slurp(ws / "pca.csv");
    CHECK(csv.rfind("sample,pair_id,label,pc1,pc2,pc3\n", 0) == 0);
    CHECK(line_count(csv) == 41);
    CHECK(fs::exists(ws / "pca.csv.config.json"));
}

TEST_CASE("exit codes") {
    Workspace ws;
    CHECK(ws.flexac("--help").status == 0);
    CHECK(ws.flexac("profile --bogus-flag 1").status == 2);
    CHECK(ws.flexac("").status == 2);
    CHECK(ws.flexac("profile --activations " + ws.path("missing.actv") + " --out " + ws.path("p")).status == 2);

    REQUIRE(ws.flexac("make-fixture --seed 1 --num-pairs 10 --out " + ws.path("fx")).status == 0);
    const std::string good = slurp(ws / "fx/activations.actv");
    std::ofstream(ws / "cut.actv", std::ios::binary) << good.substr(0, good.size() - 5);
    Run r = ws.flexac("profile --activations " + ws.path("cut.actv") + " --out " + ws.path("p"));
    CHECK(r.status == 2);
    CHECK(r.err.find("TruncatedPayload") != std::string::npos);

    std::string magic = good;
    magic.replace(magic.find("ACTV"), 4, "XXXX");
    std::ofstream(ws / "magic.actv", std::ios::binary) << magic;
    r = ws.flexac("build-vector --activations " + ws.path("magic.actv") + " --layers 1 --out " + ws.path("x.strv"));
    CHECK(r.status == 2);
    CHECK(r.err.find("BadMagic") != std::string::npos);

    CHECK(ws.flexac("build-vector --activations " + ws.path("fx/activations.actv") + " --layers 3,1 --out " +
                    ws.path("x.strv"))
              .status == 2);

    // Identical pair members: the mean difference is zero.
    flexac::ActivationSet flat;
    flat.num_samples = 2;
    flat.num_layers = 1;
    flat.hidden_dim = 2;
    flat.labels = {0, 1};
    flat.pair_ids = {1, 1};
    flat.data = {1, 2, 1, 2};
    {
        std::ofstream out(ws / "flat.actv", std::ios::binary);
        flexac::write_activations(flat, out);
    }
    r = ws.flexac("build-vector --activations " + ws.path("flat.actv") + " --layers 0 --out " + ws.path("x.strv"));
    CHECK(r.status == 3);
    CHECK(r.err.find("ZeroSteeringVector") != std::string::npos);
    CHECK_FALSE(fs::exists(ws / "x.strv"));
}
