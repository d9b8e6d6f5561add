// SPDX-License-Identifier: Apache-2.0
#include "quadcurl/cli.hpp"

int main(int argc, char** argv) { return quadcurl::run_cli(std::vector<std::string>(argv + 1, argv + argc)); }
