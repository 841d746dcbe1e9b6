FileChannel channel = new FileOutputStream("dump.bin").getChannel();
channel.write(buffer);
channel.close();
