#include "qfbv.hpp"

#include <iostream>
#include <string>

// Line-oriented SMT-LIB REPL for the QF_BV fragment the project emits.
// Commands arrive on stdin; every response is a single flushed line.

int main() {
    std::ios::sync_with_stdio(false);
    qfbv::Session session;
    std::string buffer;
    std::string chunk;
    size_t pos = 0;
    while (std::getline(std::cin, chunk)) {
        buffer += chunk;
        buffer += '\n';
        while (true) {
            std::string error;
            auto expr = qfbv::parse_sexpr(buffer, pos, error);
            if (!expr) {
                if (!error.empty()) {
                    std::cout << "(error \"" << error << "\")" << std::endl;
                    buffer.clear();
                    pos = 0;
                }
                break;
            }
            bool quit = false;
            std::string out = qfbv::handle_command(session, *expr, quit);
            if (!out.empty()) std::cout << out << std::endl;
            if (quit) return 0;
        }
        if (pos > 0) {
            buffer.erase(0, pos);
            pos = 0;
        }
    }
    return 0;
}
