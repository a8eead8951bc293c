#include <cuda.h>
__device__ int *published;
__device__ int seen;
__global__ void peek(void) {
  __shared__ int mine[4];
  int x;
  if (blockIdx.x == 0) {
    mine[0] = 7;
    published = mine;
  } else {
    while (published == 0) {
    }
    x = *published;
    seen = x;
  }
}
int main(void) {
  peek<<<2, 1>>>();
  cudaDeviceSynchronize();
  return 0;
}
