#include <cstdio>
int main(){ std::puts("tdd"); }
