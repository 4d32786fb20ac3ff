#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "io/csv.hpp"
#include "io/manifest.hpp"
#include "io/svg_plot.hpp"
#include "nn/model.hpp"
#include "nn/serialize.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& scratch_dir() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "countlab_io_test";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("csv roundtrip preserves header and rows") {
    io::Csv csv;
    csv.header = {"a", "b", "c"};
    csv.rows = {{"1", "x", "2.5"}, {"2", "y", "nan"}};
    const auto path = (scratch_dir() / "roundtrip.csv").string();
    io::write_csv(path, csv);
    const auto back = io::read_csv(path);
    CHECK(back.header == csv.header);
    CHECK(back.rows == csv.rows);
    CHECK(slurp(path) == "a,b,c\n1,x,2.5\n2,y,nan\n");
}

TEST_CASE("csv fields must stay quote-free") {
    io::Csv csv;
    csv.header = {"a"};
    csv.rows = {{"has,comma"}};
    const auto path = (scratch_dir() / "bad.csv").string();
    CHECK_THROWS_AS(io::write_csv(path, csv), std::invalid_argument);
    csv.rows = {{"has\nnewline"}};
    CHECK_THROWS_AS(io::write_csv(path, csv), std::invalid_argument);
    csv.rows.clear();
    csv.header = {};
    CHECK_THROWS_AS(io::write_csv(path, csv), std::invalid_argument);
}

TEST_CASE("csv reader strips carriage returns and skips blanks") {
    const auto path = scratch_dir() / "crlf.csv";
    std::ofstream(path, std::ios::binary) << "a,b\r\n1,2\r\n\r\n3,4\r\n";
    const auto csv = io::read_csv(path.string());
    CHECK(csv.header == std::vector<std::string>{"a", "b"});
    CHECK(csv.rows.size() == 2);
    CHECK(csv.rows[1] == std::vector<std::string>{"3", "4"});
}

TEST_CASE("csv reader rejects ragged rows and missing files") {
    const auto path = scratch_dir() / "ragged.csv";
    std::ofstream(path, std::ios::binary) << "a,b\n1\n";
    CHECK_THROWS_AS(io::read_csv(path.string()), std::runtime_error);
    CHECK_THROWS_AS(io::read_csv((scratch_dir() / "missing.csv").string()), std::runtime_error);
}

TEST_CASE("doubles format to the shortest roundtrip") {
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(1.0) == "1");
    CHECK(std::stod(io::format_double(1.0 / 3)) == 1.0 / 3);
    CHECK(io::format_double(0.0) == "0");
}

TEST_CASE("line plots are byte-stable and marker-complete") {
    io::Series s;
    s.label = "m_thr";
    s.points = {{8, 8}, {16, 12}, {32, 22}};
    const auto a = (scratch_dir() / "plot_a.svg").string();
    const auto b = (scratch_dir() / "plot_b.svg").string();
    io::write_line_plot(a, "phase", "d", "m_thr", {s});
    io::write_line_plot(b, "phase", "d", "m_thr", {s});
    const auto text = slurp(a);
    CHECK(text == slurp(b));
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("phase") != std::string::npos);
    size_t markers = 0, at = 0;
    while ((at = text.find("<circle", at)) != std::string::npos) {
        ++markers;
        at += 7;
    }
    CHECK(markers == 3);
}

TEST_CASE("legends appear only for multiple series") {
    io::Series s1{"alpha", {{0, 1}, {1, 2}}};
    io::Series s2{"beta", {{0, 2}, {1, 1}}};
    const auto solo = (scratch_dir() / "solo.svg").string();
    const auto duo = (scratch_dir() / "duo.svg").string();
    io::write_line_plot(solo, "t", "x", "y", {s1});
    io::write_line_plot(duo, "t", "x", "y", {s1, s2});
    CHECK(slurp(solo).find("alpha") == std::string::npos);
    const auto both = slurp(duo);
    CHECK(both.find("alpha") != std::string::npos);
    CHECK(both.find("beta") != std::string::npos);
}

TEST_CASE("plots need at least one point") {
    io::Series empty{"none", {}};
    CHECK_THROWS_AS(
        io::write_line_plot((scratch_dir() / "none.svg").string(), "t", "x", "y", {empty}),
        std::invalid_argument);
}

TEST_CASE("manifest records the run") {
    io::Manifest m;
    m.subcommand = "analyze";
    m.flags = {{"--check", "welch"}, {"--m", "8"}};
    m.seed = 42;
    m.wall_seconds = 0.25;
    m.exit_code = 0;
    const auto path = (scratch_dir() / "manifest.json").string();
    io::write_manifest(path, m);
    const auto j = nlohmann::json::parse(slurp(path));
    CHECK(j["subcommand"] == "analyze");
    CHECK(j["seed"] == 42);
    CHECK(j["exit_code"] == 0);
    CHECK(j["version"] == io::kToolVersion);
    CHECK(j["wall_seconds"] == 0.25);
    CHECK(j["flags"]["--check"] == "welch");
    CHECK(j["flags"]["--m"] == "8");
}

TEST_CASE("output directory honors the environment override") {
    setenv("COUNTLAB_OUT_DIR", "/tmp/countlab_env_dir", 1);
    CHECK(io::default_out_dir() == "/tmp/countlab_env_dir");
    unsetenv("COUNTLAB_OUT_DIR");
    CHECK(io::default_out_dir() == ".");
}

TEST_CASE("models roundtrip through json") {
    nn::TransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.head_dim = 3;
    cfg.model_dim = 6;
    cfg.vocab_size = 4;
    cfg.context_len = 5;
    cfg.use_layer_norm = true;
    cfg.use_positional = true;
    cfg.bidirectional = {1, 0};
    const auto model = nn::random_model(cfg, 9, 77);
    const auto path = (scratch_dir() / "model.json").string();
    nn::save_model(model, path);
    const auto back = nn::load_model(path);
    CHECK(back.config.n_layers == 2);
    CHECK(back.config.bidirectional == cfg.bidirectional);
    CHECK(back.token_embeddings == model.token_embeddings);
    CHECK(back.layers[0].heads[1].wk == model.layers[0].heads[1].wk);
    CHECK(back.layers[1].mlp.b1 == model.layers[1].mlp.b1);
    CHECK(back.final_ln_gain == model.final_ln_gain);
    CHECK(back.readout == model.readout);
}

TEST_CASE("model loader rejects foreign json") {
    const auto path = scratch_dir() / "garbage.json";
    std::ofstream(path) << "{\"format\": \"something-else\"}";
    CHECK_THROWS(nn::load_model(path.string()));
}
