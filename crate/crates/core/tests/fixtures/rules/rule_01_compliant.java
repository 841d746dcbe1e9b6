try {
    FileChannel channel = new FileOutputStream("out.bin").getChannel();
    channel.write(buffer);
} catch (Exception e) {
    e.printStackTrace();
}
