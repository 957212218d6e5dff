// Writes the 20-patient synthetic corpus into a directory.

#include "synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: gen_synthetic_corpus <output-dir>\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : cohort::synth::generate_corpus()) {
        std::ofstream out(dir / name, std::ios::binary);
        out << content;
        if (!out) {
            std::cerr << "cannot write " << (dir / name) << "\n";
            return 1;
        }
    }
    return 0;
}
