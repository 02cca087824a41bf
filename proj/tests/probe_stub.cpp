// Stand-in for an external probe, speaking the MEASURE line protocol.
//
//   probe_stub fixed <error> <stderr>   answer every request with the pair
//   probe_stub err                      answer `ERR <message>`
//   probe_stub hang                     never answer
//   probe_stub quit                     exit before answering
//   probe_stub sim <alpha> <omega_d> <shots> <seed>
//                                       Ohmic simulated probe behind the pipe

#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include "ddfilt/calibration.hpp"

int main(int argc, char** argv) {
    if (argc < 2) return 2;
    const std::string mode = argv[1];
    std::unique_ptr<ddfilt::SimulatedProbe> sim;
    if (mode == "sim") {
        if (argc < 6) return 2;
        sim = std::make_unique<ddfilt::SimulatedProbe>(
            ddfilt::NoiseSpectrum::ohmic(std::atof(argv[2]), std::atof(argv[3])), 0.0,
            std::atoi(argv[4]), std::strtoull(argv[5], nullptr, 10));
    }
    std::string line;
    while (std::getline(std::cin, line)) {
        if (mode == "fixed" && argc >= 4) {
            std::cout << argv[2] << ' ' << argv[3] << std::endl;
        } else if (mode == "err") {
            std::cout << "ERR laser unlocked" << std::endl;
        } else if (mode == "hang") {
            std::this_thread::sleep_for(std::chrono::hours(1));
        } else if (mode == "quit") {
            return 0;
        } else if (sim) {
            std::istringstream is(line);
            std::string word;
            double tau = 0, tau_pi = 0;
            int n = 0;
            is >> word >> tau >> tau_pi >> n;
            std::vector<double> d(static_cast<std::size_t>(n));
            for (double& x : d) is >> x;
            try {
                const auto m = sim->measure(ddfilt::PulseSequence(d, tau, tau_pi));
                std::cout << ddfilt::format_double(m.error) << ' '
                          << ddfilt::format_double(m.standard_error) << std::endl;
            } catch (const std::exception& e) {
                std::cout << "ERR " << e.what() << std::endl;
            }
        } else {
            return 2;
        }
    }
    return 0;
}
