// Writes a small synthetic KG pair (dumps plus link files) for trying the CLI.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "helea/testing/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate a miniature KG_A/KG_B fixture"};
    std::string dir = "fixture";
    helea::testing::MiniKgSpec spec;
    app.add_option("dir", dir, "output directory");
    app.add_option("--seed", spec.seed, "generator seed");
    app.add_option("--seed-groups", spec.n_seed_groups, "collision groups with evaluation seeds");
    app.add_option("--train-groups", spec.n_train_groups, "collision groups for training");
    CLI11_PARSE(app, argc, argv);

    const auto kg = helea::testing::make_mini_kg(spec);
    std::filesystem::create_directories(dir);
    auto put = [&](const char* name, const std::string& text) {
        std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
        out << text;
    };
    put("kg_a.tsv", kg.dump_a);
    put("kg_b.tsv", kg.dump_b);
    put("links.tsv", kg.links);
    put("seed_links.tsv", kg.seed_links);
    std::cout << "wrote fixture to " << dir << '\n';
    return 0;
}
