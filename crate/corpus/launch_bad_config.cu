#include <stdio.h>
#include <cuda.h>
__global__ void k(void) {
}
int main(void) {
  k<<<1, 2048>>>();
  printf("%s\n", cudaGetErrorString(cudaGetLastError()));
  printf("%s\n", cudaGetErrorString(cudaGetLastError()));
  return 0;
}
