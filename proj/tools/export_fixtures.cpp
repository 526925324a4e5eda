// Writes every builtin problem as <dir>/<name>.json.
#include "daekit/problem_library.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: export_fixtures <dir>\n";
        return 2;
    }
    std::filesystem::create_directories(argv[1]);
    for (const auto& name : daekit::builtin_names()) {
        std::ofstream f(std::filesystem::path(argv[1]) / (name + ".json"));
        f << daekit::problem_to_json(daekit::builtin_spec(name)).dump(2) << "\n";
    }
    return 0;
}
