#include "app.hpp"

int main(int argc, char** argv) { return qmlab::app::main_entry(argc, argv); }
