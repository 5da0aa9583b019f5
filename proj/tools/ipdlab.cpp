// SPDX-License-Identifier: Apache-2.0
#include "ipd/cli.hpp"

int main(int argc, char** argv) { return ipd::cli::run(argc, argv); }
