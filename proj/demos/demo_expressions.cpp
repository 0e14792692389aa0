#include "fglab/parse.hpp"

#include <iostream>

int main() {
    using namespace fglab;
    Expr e = parse_expr("(1 - r^2/4)^2");
    std::cout << "parsed:      " << to_string(e) << "\n";
    std::cout << "d/dr:        " << to_string(differentiate(e, "r")) << "\n";
    std::cout << "at r=0:      " << evaluate(e, {{"r", 0.0}}) << "\n";
    return 0;
}
