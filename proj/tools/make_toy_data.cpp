// Writes the toy translation task used by configs/toy.json.
#include <iostream>

#include "CLI11.hpp"

#include "arforge/pipeline/toy_task.hpp"

int main(int argc, char **argv) {
    arforge::pipeline::ToyTaskOptions options;
    std::string out = "data/toy";
    CLI::App app{"Generate the toy translation task", "make_toy_data"};
    app.add_option("-o,--out", out, "output directory");
    app.add_option("--seed", options.seed, "generator seed");
    app.add_option("--pairs", options.authentic_pairs, "authentic bilingual pairs");
    app.add_option("--mono", options.monolingual_lines, "monolingual lines per side");
    app.add_option("--dev", options.dev_pairs, "dev pairs");
    app.add_option("--test", options.test_pairs, "test pairs");
    CLI11_PARSE(app, argc, argv);
    try {
        arforge::pipeline::write_toy_task(out, arforge::pipeline::make_toy_task(options));
    } catch (const std::exception &e) {
        std::cerr << "error[stage]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
