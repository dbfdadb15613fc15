// Regenerates the synthetic dialogue corpus shipped under data/. The output
// is a pure function of (count, seed), so the checked-in file can always be
// reproduced exactly.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "csa/jsonl.hpp"
#include "csa/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate a synthetic dialogue corpus in the ed-csv format"};
    int count = 500;
    std::uint64_t seed = 20250809;
    std::string out = "data/synthetic_dialogues.csv";
    app.add_option("--count", count, "number of dialogues");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--out", out, "output path");
    CLI11_PARSE(app, argc, argv);

    try {
        csa::write_text_file(out, csa::make_synthetic_corpus_csv(count, seed));
    } catch (const csa::Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    std::cout << "wrote " << count << " dialogues to " << out << '\n';
    return 0;
}
