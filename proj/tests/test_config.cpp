#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "mcdiag/experiment.hpp"
#include "mcdiag/pipeline.hpp"

using namespace mcdiag;
namespace fs = std::filesystem;

TEST(TomlLite, ParsesSectionsScalarsAndArrays) {
    std::istringstream in(R"(
# top comment
[experiment]
out_dir = "out"          # trailing comment
seeds = [1, 2, 3]
k_fraction = 0.05
verbose = true
names = ["a", "b"]

[data.gbt]
base_trees = 50
)");
    toml::Document doc = toml::parse(in);
    const auto& exp = doc.table("experiment");
    EXPECT_EQ(exp.get<std::string>("out_dir"), "out");
    EXPECT_EQ(exp.get<std::vector<std::uint64_t>>("seeds"),
              (std::vector<std::uint64_t>{1, 2, 3}));
    EXPECT_DOUBLE_EQ(exp.get<double>("k_fraction"), 0.05);
    EXPECT_TRUE(exp.get<bool>("verbose"));
    EXPECT_EQ(exp.get<std::vector<std::string>>("names"),
              (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(doc.table("data.gbt").get<int>("base_trees"), 50);
    EXPECT_EQ(exp.get_or<int>("missing", 7), 7);
    EXPECT_THROW(exp.get<int>("missing"), ConfigError);
    EXPECT_THROW(exp.get<int>("out_dir"), ConfigError);
}

TEST(TomlLite, MalformedInput) {
    std::istringstream bad_header("[unterminated\nx = 1\n");
    EXPECT_THROW(toml::parse(bad_header), ConfigError);
    std::istringstream no_eq("[a]\njust_a_key\n");
    EXPECT_THROW(toml::parse(no_eq), ConfigError);
    std::istringstream bad_value("[a]\nx = what\n");
    EXPECT_THROW(toml::parse(bad_value), ConfigError);
}

TEST(Experiment, DefaultDeskConfigLoads) {
    fs::path root = fs::temp_directory_path() / "mcdiag_cfg_test";
    fs::create_directories(root);
    write_desk_inputs(root);

    ExperimentConfig cfg = load_experiment(root / "configs" / "experiment.toml");
    cfg.validate_files();
    EXPECT_EQ(cfg.datasets.size(), 5u);
    EXPECT_EQ(cfg.seeds.size(), 5u);
    EXPECT_FALSE(cfg.config_hash.empty());

    const DatasetPlan& bank = cfg.dataset("banknote");
    ASSERT_TRUE(bank.families.count(ModelFamily::Gbt));
    const FamilyPlan& plan = bank.families.at(ModelFamily::Gbt);
    EXPECT_EQ(std::get<GbtConfig>(plan.base_cfg).n_trees, 50);
    EXPECT_EQ(std::get<GbtConfig>(plan.base_cfg).max_depth, 3);
    EXPECT_EQ(std::get<GbtConfig>(plan.weak_cfg).n_trees, 10);
    EXPECT_EQ(plan.n_drop, 2u);
    // no cut override for banknote: cut model falls back to base
    EXPECT_EQ(std::get<GbtConfig>(plan.cut_model()).n_trees, 50);

    const FamilyPlan& moons_gbt = cfg.dataset("moons").families.at(ModelFamily::Gbt);
    EXPECT_EQ(std::get<GbtConfig>(moons_gbt.cut_model()).n_trees, 12);

    const FamilyPlan& mlp_plan = bank.families.at(ModelFamily::Mlp);
    EXPECT_EQ(std::get<MlpConfig>(mlp_plan.base_cfg).hidden_size, 40);
    EXPECT_EQ(std::get<MlpConfig>(mlp_plan.base_cfg).n_iterations, 1000);
}

TEST(Experiment, MissingFilesFailValidation) {
    fs::path root = fs::temp_directory_path() / "mcdiag_cfg_missing";
    fs::create_directories(root / "configs");
    std::ofstream out(root / "configs" / "bad.toml");
    out << "[experiment]\ndatasets = [\"ghost\"]\n\n[ghost]\ncsv = \"nope.csv\"\n\n"
           "[ghost.gbt]\nn_drop = 1\n";
    out.close();
    ExperimentConfig cfg = load_experiment(root / "configs" / "bad.toml");
    EXPECT_THROW(cfg.validate_files(), ConfigError);
}

TEST(Experiment, SurrogateCsvsHaveDocumentedShapes) {
    fs::path root = fs::temp_directory_path() / "mcdiag_cfg_shapes";
    fs::create_directories(root);
    write_desk_inputs(root);
    struct Expect {
        const char* file;
        std::size_t rows, cols, zeros;
    };
    const Expect expected[] = {
        {"banknote.csv", 1371, 4, 761},
        {"diabetes.csv", 767, 8, 500},
        {"water_potability.csv", 3276, 9, 1998},
        {"moons.csv", 1600, 2, 800},
        {"rings.csv", 2000, 2, 0}, // class balance varies with the band draw
    };
    for (const auto& e : expected) {
        Dataset d = load_csv(root / "data" / e.file, "label").data;
        EXPECT_EQ(d.rows(), e.rows) << e.file;
        EXPECT_EQ(d.cols(), e.cols) << e.file;
        if (e.zeros > 0) EXPECT_EQ(d.count_label(0), e.zeros) << e.file;
    }
}

TEST(Experiment, DatagenIsDeterministic) {
    fs::path a = fs::temp_directory_path() / "mcdiag_det_a";
    fs::path b = fs::temp_directory_path() / "mcdiag_det_b";
    fs::create_directories(a);
    fs::create_directories(b);
    write_desk_inputs(a);
    write_desk_inputs(b);
    for (const char* f : {"banknote.csv", "diabetes.csv", "water_potability.csv", "moons.csv",
                          "rings.csv"}) {
        std::ifstream fa(a / "data" / f);
        std::ifstream fb(b / "data" / f);
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        EXPECT_EQ(sa.str(), sb.str()) << f;
    }
}
