#include <stdio.h>
#include <cuda.h>
__global__ void vote(int *out) {
  int tid = threadIdx.x;
  int count = __syncthreads_count(tid % 3 == 0);
  int all = __syncthreads_and(tid < 100);
  int any = __syncthreads_or(tid == 5);
  if (tid == 0) {
    out[0] = count;
    out[1] = all;
    out[2] = any;
  }
}
int main(void) {
  int *dev, host[3];
  cudaMalloc(&dev, sizeof(host));
  vote<<<1, 9>>>(dev);
  cudaMemcpy(host, dev, sizeof(host), cudaMemcpyDeviceToHost);
  printf("count %d and %d or %d\n", host[0], host[1], host[2]);
  return 0;
}
