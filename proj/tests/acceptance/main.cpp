#include "acceptance/acceptance.hpp"

#include "daepencil/error.hpp"

#include <iostream>

int main(int argc, char** argv) {
    acceptance::Options opts;
    opts.problem_dir = argc > 1 ? argv[1] : acceptance::default_problem_dir();
    try {
        return acceptance::print(acceptance::run(opts)) == 0 ? 0 : 1;
    } catch (const daepencil::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}
