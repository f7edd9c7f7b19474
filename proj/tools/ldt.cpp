#include <cstdio>

int main() {
    std::puts("ldt: subcommands not wired yet");
    return 0;
}
